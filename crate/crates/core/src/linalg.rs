//! Weighted ridge regression with an unpenalized intercept.

use nalgebra::{DMatrix, DVector};

use crate::error::{LimeadeError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

/// Minimizes `sum_i w_i (y_i - b - z_i . beta)^2 + lambda |beta|^2` over
/// `(b, beta)`.
///
/// Centering by the weighted means removes the intercept from the penalized
/// system. The smaller of the primal (`p x p`) and dual (`n x n`) systems is
/// factored; both give the same minimizer.
pub fn weighted_ridge(
    design: &DMatrix<f64>,
    targets: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<RidgeFit> {
    let (n, p) = design.shape();
    if targets.len() != n {
        return Err(LimeadeError::Shape {
            expected: n,
            got: targets.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(LimeadeError::Shape {
                expected: n,
                got: w.len(),
            });
        }
        if w.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(LimeadeError::Value("regression weights must be nonnegative".into()));
        }
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(LimeadeError::Value(format!(
            "ridge lambda must be positive, got {lambda}"
        )));
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let w_sum: f64 = w.iter().sum();
    if w_sum <= 0.0 {
        return Err(LimeadeError::Numeric("total regression weight is zero".into()));
    }

    let y_mean = w.iter().zip(targets).map(|(wi, yi)| wi * yi).sum::<f64>() / w_sum;
    let mut x_mean = DVector::<f64>::zeros(p);
    for (i, &wi) in w.iter().enumerate() {
        if wi != 0.0 {
            x_mean.axpy(wi, &design.row(i).transpose(), 1.0);
        }
    }
    x_mean /= w_sum;

    // Rows of sqrt(W) (Z - 1 x_mean^T) and sqrt(W) (y - y_mean).
    let mut a = design.clone();
    let mut b = DVector::<f64>::zeros(n);
    for i in 0..n {
        let s = w[i].sqrt();
        for j in 0..p {
            a[(i, j)] = s * (a[(i, j)] - x_mean[j]);
        }
        b[i] = s * (targets[i] - y_mean);
    }

    let coef = if p == 0 {
        DVector::zeros(0)
    } else if p <= n {
        let mut gram = a.tr_mul(&a);
        for j in 0..p {
            gram[(j, j)] += lambda;
        }
        let rhs = a.tr_mul(&b);
        solve_spd(gram, &rhs)?
    } else {
        let mut gram = &a * a.transpose();
        for i in 0..n {
            gram[(i, i)] += lambda;
        }
        let alpha = solve_spd(gram, &b)?;
        a.tr_mul(&alpha)
    };

    let intercept = y_mean - x_mean.dot(&coef);
    let coef: Vec<f64> = coef.iter().copied().collect();
    if !intercept.is_finite() || coef.iter().any(|c| !c.is_finite()) {
        return Err(LimeadeError::Numeric("ridge solution is not finite".into()));
    }
    Ok(RidgeFit { intercept, coef })
}

/// Unweighted ridge over sparse rows `(column, value)` with `p` columns.
///
/// Builds the centered Gram matrix from sparse products, so cost scales with
/// the nonzeros rather than `n * p`. Solves the primal or dual system,
/// whichever is smaller.
pub fn sparse_ridge(rows: &[Vec<(usize, f64)>], p: usize, targets: &[f64], lambda: f64) -> Result<RidgeFit> {
    let n = rows.len();
    if targets.len() != n {
        return Err(LimeadeError::Shape {
            expected: n,
            got: targets.len(),
        });
    }
    if n == 0 {
        return Err(LimeadeError::Numeric("no rows".into()));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(LimeadeError::Value(format!(
            "ridge lambda must be positive, got {lambda}"
        )));
    }
    let nf = n as f64;
    let y_mean = targets.iter().sum::<f64>() / nf;
    let yc: Vec<f64> = targets.iter().map(|y| y - y_mean).collect();
    let mut x_mean = vec![0.0; p];
    for r in rows {
        for &(j, v) in r {
            if j >= p {
                return Err(LimeadeError::Shape { expected: p, got: j + 1 });
            }
            x_mean[j] += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= nf);

    let coef: Vec<f64> = if p == 0 {
        Vec::new()
    } else if p <= n {
        // Z^T Z - n m m^T + lambda I.
        let mut gram = DMatrix::<f64>::zeros(p, p);
        let mut rhs = DVector::<f64>::zeros(p);
        for (r, &y) in rows.iter().zip(&yc) {
            for &(j, v) in r {
                rhs[j] += v * y;
                for &(k, w) in r {
                    gram[(j, k)] += v * w;
                }
            }
        }
        for j in 0..p {
            for k in 0..p {
                gram[(j, k)] -= nf * x_mean[j] * x_mean[k];
            }
            gram[(j, j)] += lambda;
        }
        solve_spd(gram, &rhs)?.iter().copied().collect()
    } else {
        let mut dense_rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        let row_mean: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x_mean[j]).sum())
            .collect();
        let mm: f64 = x_mean.iter().map(|m| m * m).sum();
        for r in rows {
            let mut d = vec![0.0; p];
            for &(j, v) in r {
                d[j] += v;
            }
            dense_rows.push(d);
        }
        let mut gram = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for k in i..n {
                let dot: f64 = rows[i].iter().map(|&(j, v)| v * dense_rows[k][j]).sum();
                let g = dot - row_mean[i] - row_mean[k] + mm;
                gram[(i, k)] = g;
                gram[(k, i)] = g;
            }
            gram[(i, i)] += lambda;
        }
        let alpha = solve_spd(gram, &DVector::from_vec(yc))?;
        let alpha_sum: f64 = alpha.iter().sum();
        let mut beta: Vec<f64> = x_mean.iter().map(|m| -m * alpha_sum).collect();
        for (r, a) in rows.iter().zip(alpha.iter()) {
            for &(j, v) in r {
                beta[j] += v * a;
            }
        }
        beta
    };
    let intercept = y_mean - x_mean.iter().zip(&coef).map(|(m, c)| m * c).sum::<f64>();
    if !intercept.is_finite() || coef.iter().any(|c| !c.is_finite()) {
        return Err(LimeadeError::Numeric("ridge solution is not finite".into()));
    }
    Ok(RidgeFit { intercept, coef })
}

fn solve_spd(m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = m.cholesky().ok_or_else(|| {
        LimeadeError::Numeric("normal equations are not positive definite; raise ridge_lambda".into())
    })?;
    Ok(chol.solve(rhs))
}
