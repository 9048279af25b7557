mod common;

use common::{dense_instance, ridge_oracle, DenseBridge};
use limeade_core::explain::fit_local_surrogate_with_samples;
use limeade_core::linalg::weighted_ridge;
use limeade_core::{
    fit_global_surrogate, fit_local_surrogate, InterpVec, LimeadeError, ModelParams, OpaqueModel,
    OpaqueVec, ProximityKernel, Result, TrainConfig, WeightedExample,
};
use nalgebra::DMatrix;
use rand::Rng;

/// Scores with the raw margin, so a linear bridge gives a linear target.
struct LinearScore;

impl OpaqueModel for LinearScore {
    fn fit(&self, _: &[WeightedExample], _: &TrainConfig) -> Result<ModelParams> {
        Err(LimeadeError::Value("fixed model".into()))
    }

    fn score(&self, params: &ModelParams, x: &OpaqueVec) -> Result<f64> {
        params.margin(x)
    }
}

fn random_rows(n: usize, p: usize, seed: u64, density: f64) -> Vec<Vec<f64>> {
    let mut rng = limeade_core::seed::rng(seed);
    (0..n)
        .map(|_| {
            (0..p)
                .map(|_| if rng.random_bool(density) { rng.random_range(0.1..1.0) } else { 0.0 })
                .collect()
        })
        .collect()
}

#[test]
fn weighted_ridge_matches_normal_equations() {
    for (n, p) in [(12, 4), (4, 9)] {
        let rows = random_rows(n, p, 3 + p as u64, 0.7);
        let mut rng = limeade_core::seed::rng(11);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let design = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        let fit = weighted_ridge(&design, &y, Some(&w), 0.3).unwrap();
        let (b, coef) = ridge_oracle(&rows, &y, &w, 0.3);
        assert!((fit.intercept - b).abs() < 1e-8);
        for (a, c) in fit.coef.iter().zip(&coef) {
            assert!((a - c).abs() < 1e-8, "{a} vs {c}");
        }
    }
}

#[test]
fn local_surrogate_matches_normal_equations_on_its_samples() {
    let x = dense_instance("x", &[0.5, 0.0, 1.2, 0.3, 0.0, 0.8]);
    let bridge = DenseBridge { dim: 6 };
    let params = ModelParams {
        weights: vec![1.0, -2.0, 0.7, 0.0, 3.0, -1.1],
        bias: 0.2,
    };
    let model = limeade_core::Logistic;
    let (g, s) = fit_local_surrogate_with_samples(
        &model,
        &params,
        &x,
        &bridge,
        64,
        &ProximityKernel::default(),
        0.05,
        4,
    )
    .unwrap();
    let rows: Vec<Vec<f64>> = s
        .masks
        .iter()
        .map(|m| m.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect())
        .collect();
    let (b, coef) = ridge_oracle(&rows, &s.targets, &s.weights, 0.05);
    assert!((g.intercept - b).abs() < 1e-8);
    for (k, &j) in s.features.iter().enumerate() {
        assert!((g.weights[j] - coef[k]).abs() < 1e-8);
    }
    for j in [1, 4] {
        assert_eq!(g.weights[j], 0.0);
    }
    assert!(s.masks[0].iter().all(|&m| m));
}

#[test]
fn local_surrogate_recovers_linear_model() {
    let xv = [0.5, 0.0, 1.2, 0.3, 0.9, 0.8, 0.0, 0.4];
    let x = dense_instance("x", &xv);
    let bridge = DenseBridge { dim: xv.len() };
    let w = [1.0, -2.0, 0.7, -0.5, 3.0, -1.1, 0.6, 0.25];
    let params = ModelParams {
        weights: w.to_vec(),
        bias: 0.2,
    };
    let g = fit_local_surrogate(&LinearScore, &params, &x, &bridge, 200, &ProximityKernel::default(), 1e-6, 9).unwrap();
    for j in 0..xv.len() {
        // score(mask * x) = b + sum_j (w_j x_j) m_j.
        assert!((g.weights[j] - w[j] * xv[j]).abs() < 1e-3, "feature {j}");
    }
    assert!((g.intercept - 0.2).abs() < 1e-3);

    // Weighted R^2 of the surrogate on its own samples.
    let (g2, s) = fit_local_surrogate_with_samples(&LinearScore, &params, &x, &bridge, 200, &ProximityKernel::default(), 1e-6, 9).unwrap();
    let wsum: f64 = s.weights.iter().sum();
    let ym = s.targets.iter().zip(&s.weights).map(|(y, w)| y * w).sum::<f64>() / wsum;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for ((m, y), wt) in s.masks.iter().zip(&s.targets).zip(&s.weights) {
        let pred = g2.intercept
            + s.features.iter().zip(m).filter(|(_, &k)| k).map(|(&j, _)| g2.weights[j]).sum::<f64>();
        ss_res += wt * (y - pred).powi(2);
        ss_tot += wt * (y - ym).powi(2);
    }
    assert!(1.0 - ss_res / ss_tot >= 0.99);
}

#[test]
fn local_surrogate_of_constant_model() {
    let x = dense_instance("x", &[0.5, 0.2, 1.2]);
    let bridge = DenseBridge { dim: 3 };
    let params = ModelParams {
        weights: vec![0.0; 3],
        bias: 0.7,
    };
    let g = fit_local_surrogate(&LinearScore, &params, &x, &bridge, 40, &ProximityKernel::default(), 0.01, 1).unwrap();
    assert!(g.weights.iter().all(|w| w.abs() < 1e-6));
    assert!((g.intercept - 0.7).abs() < 1e-6);
}

#[test]
fn local_surrogate_of_empty_anchor_is_its_score() {
    let x = dense_instance("x", &[0.0, 0.0, 0.0]);
    let bridge = DenseBridge { dim: 3 };
    let params = ModelParams {
        weights: vec![1.0, -1.0, 0.5],
        bias: 0.4,
    };
    let g = fit_local_surrogate(&LinearScore, &params, &x, &bridge, 10, &ProximityKernel::default(), 0.01, 2).unwrap();
    assert_eq!(g.weights, vec![0.0; 3]);
    assert_eq!(g.intercept, 0.4);
}

#[test]
fn local_surrogate_is_deterministic_and_checks_samples() {
    let x = dense_instance("x", &[0.5, 0.2, 1.2]);
    let bridge = DenseBridge { dim: 3 };
    let params = ModelParams {
        weights: vec![1.0, -1.0, 0.5],
        bias: 0.0,
    };
    let k = ProximityKernel::default();
    let a = fit_local_surrogate(&limeade_core::Logistic, &params, &x, &bridge, 30, &k, 0.01, 5).unwrap();
    let b = fit_local_surrogate(&limeade_core::Logistic, &params, &x, &bridge, 30, &k, 0.01, 5).unwrap();
    assert_eq!(a, b);
    assert!(matches!(
        fit_local_surrogate(&limeade_core::Logistic, &params, &x, &bridge, 4, &k, 0.01, 5),
        Err(LimeadeError::InsufficientSamples { .. })
    ));
    assert!(fit_local_surrogate(&limeade_core::Logistic, &params, &x, &bridge, 30, &k, 0.0, 5).is_err());
}

fn interp_rows(rows: &[Vec<f64>]) -> Vec<InterpVec> {
    rows.iter().map(|r| InterpVec::from_dense(r).unwrap()).collect()
}

#[test]
fn global_surrogate_recovers_generating_weights() {
    let rows = random_rows(60, 6, 21, 0.6);
    let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] - r[3]).collect();
    let g = fit_global_surrogate(&y, &interp_rows(&rows), 1e-8).unwrap();
    let want = [2.0, 0.0, 0.0, -1.0, 0.0, 0.0];
    for (a, b) in g.weights.iter().zip(want) {
        assert!((a - b).abs() < 1e-4);
    }

    let mut rows2 = rows.clone();
    rows2.push(rows[7].clone());
    let mut y2 = y.clone();
    y2.push(y[7]);
    let g2 = fit_global_surrogate(&y2, &interp_rows(&rows2), 1e-8).unwrap();
    for (a, b) in g.weights.iter().zip(&g2.weights) {
        assert!((a - b).abs() < 1e-6);
    }
    assert!((g.intercept - g2.intercept).abs() < 1e-6);
}

#[test]
fn global_surrogate_matches_normal_equations() {
    // Wide (dual path) and tall (primal path) fixtures; column 5 is never
    // active and must get weight zero.
    for n in [4usize, 40] {
        let mut rows = random_rows(n, 6, 100 + n as u64, 0.5);
        rows.iter_mut().for_each(|r| r[5] = 0.0);
        rows[0][0] = 0.5;
        let mut rng = limeade_core::seed::rng(n as u64);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = fit_global_surrogate(&y, &interp_rows(&rows), 0.2).unwrap();
        let active: Vec<usize> = (0..6).filter(|&j| rows.iter().any(|r| r[j] != 0.0)).collect();
        let sub: Vec<Vec<f64>> = rows.iter().map(|r| active.iter().map(|&j| r[j]).collect()).collect();
        let (b, coef) = ridge_oracle(&sub, &y, &vec![1.0; n], 0.2);
        assert!((g.intercept - b).abs() < 1e-8);
        for (k, &j) in active.iter().enumerate() {
            assert!((g.weights[j] - coef[k]).abs() < 1e-8);
        }
        assert_eq!(g.weights[5], 0.0);
    }
}

#[test]
fn global_surrogate_of_constant_scores() {
    let rows = random_rows(10, 4, 2, 0.5);
    let g = fit_global_surrogate(&[0.3; 10], &interp_rows(&rows), 0.1).unwrap();
    assert!((g.intercept - 0.3).abs() < 1e-12);
    assert!(g.weights.iter().all(|w| w.abs() < 1e-12));
}
