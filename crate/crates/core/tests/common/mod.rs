#![allow(dead_code)]

use limeade_core::{DomainBridge, Instance, InterpVec, OpaqueVec, Result};

/// Opaque vector = dense interpretable vector; `realize` is linear in the mask.
pub struct DenseBridge {
    pub dim: usize,
}

impl DomainBridge for DenseBridge {
    fn interp_dim(&self) -> usize {
        self.dim
    }

    fn h_prime(&self, x: &OpaqueVec) -> Result<InterpVec> {
        InterpVec::from_dense(x.as_slice())
    }

    fn realize(&self, base: &Instance, mask: &[bool]) -> Result<OpaqueVec> {
        OpaqueVec::new(base.interp().masked(mask)?.to_dense())
    }
}

pub fn dense_instance(id: &str, v: &[f64]) -> Instance {
    let interp = InterpVec::from_dense(v).unwrap();
    Instance::paired(id, OpaqueVec::new(interp.to_dense()).unwrap(), interp)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Weighted ridge with unpenalized intercept via the augmented normal
/// equations. Returns `(intercept, coef)`.
pub fn ridge_oracle(rows: &[Vec<f64>], y: &[f64], w: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p + 1];
    let mut b = vec![0.0; p + 1];
    for ((r, &yi), &wi) in rows.iter().zip(y).zip(w) {
        let z: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
        for i in 0..=p {
            b[i] += wi * z[i] * yi;
            for k in 0..=p {
                a[i][k] += wi * z[i] * z[k];
            }
        }
    }
    for (j, row) in a.iter_mut().enumerate().skip(1) {
        row[j] += lambda;
    }
    let sol = gauss_solve(a, b);
    (sol[0], sol[1..].to_vec())
}
