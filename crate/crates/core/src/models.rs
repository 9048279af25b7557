//! The opaque learner contract and two reference learners.
//!
//! Both learners minimize a weighted empirical loss plus `(l2 / 2) |w|^2`
//! with deterministic full-batch gradient descent. Retraining always starts
//! from zero parameters, so a fit is a pure function of `(examples, cfg)`.

use serde::{Deserialize, Serialize};

use crate::domain::{check_dim, Label, OpaqueVec, WeightedExample};
use crate::error::{LimeadeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ModelParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, x: &OpaqueVec) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(self
            .weights
            .iter()
            .zip(x.as_slice())
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias)
    }

    pub fn negated(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: -self.bias,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(LimeadeError::Value("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(LimeadeError::Value("epochs must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(LimeadeError::Value("l2 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A learner seen only through `fit` and `score`.
pub trait OpaqueModel: Send + Sync {
    fn fit(&self, examples: &[WeightedExample], cfg: &TrainConfig) -> Result<ModelParams>;

    /// Bounded score in `[-1, 1]`.
    fn score(&self, params: &ModelParams, x: &OpaqueVec) -> Result<f64> {
        score(params, x)
    }

    /// Predicted label; a score of exactly zero is `Positive`.
    fn predict(&self, params: &ModelParams, x: &OpaqueVec) -> Result<Label> {
        Ok(Label::from_score(self.score(params, x)?))
    }
}

/// `tanh(w . x + b)`.
pub fn score(params: &ModelParams, x: &OpaqueVec) -> Result<f64> {
    Ok(params.margin(x)?.tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Logistic,
    Hinge,
}

impl Loss {
    fn value(self, margin: f64) -> f64 {
        match self {
            // log(1 + exp(-m)) without overflow.
            Loss::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
            Loss::Hinge => (1.0 - margin).max(0.0),
        }
    }

    /// d loss / d margin; the hinge subgradient is 0 at `m = 1`.
    fn slope(self, margin: f64) -> f64 {
        match self {
            Loss::Logistic => -1.0 / (1.0 + margin.exp()),
            Loss::Hinge => {
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Weighted logistic regression.
#[derive(Debug, Clone, Copy, Default)]
pub struct Logistic;

/// Weighted linear SVM (hinge loss) used as a ranker.
#[derive(Debug, Clone, Copy, Default)]
pub struct HingeRanker;

impl OpaqueModel for Logistic {
    fn fit(&self, examples: &[WeightedExample], cfg: &TrainConfig) -> Result<ModelParams> {
        fit_with_trace(Loss::Logistic, examples, cfg).map(|(p, _)| p)
    }
}

impl OpaqueModel for HingeRanker {
    fn fit(&self, examples: &[WeightedExample], cfg: &TrainConfig) -> Result<ModelParams> {
        fit_with_trace(Loss::Hinge, examples, cfg).map(|(p, _)| p)
    }
}

pub fn fit_logistic(examples: &[WeightedExample], cfg: &TrainConfig) -> Result<ModelParams> {
    Logistic.fit(examples, cfg)
}

pub fn fit_hinge_ranker(examples: &[WeightedExample], cfg: &TrainConfig) -> Result<ModelParams> {
    HingeRanker.fit(examples, cfg)
}

/// `sum_i w_i loss(y_i (w . x_i + b)) + (l2 / 2) |w|^2`.
pub fn objective(loss: Loss, examples: &[WeightedExample], params: &ModelParams, l2: f64) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        total += ex.weight() * loss.value(ex.y.sign() * params.margin(&ex.x)?);
    }
    Ok(total + 0.5 * l2 * params.weights.iter().map(|w| w * w).sum::<f64>())
}

/// Gradient of [`objective`] with respect to `(weights, bias)`.
pub fn gradient(
    loss: Loss,
    examples: &[WeightedExample],
    params: &ModelParams,
    l2: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut gw: Vec<f64> = params.weights.iter().map(|w| l2 * w).collect();
    let mut gb = 0.0;
    for ex in examples {
        let y = ex.y.sign();
        let coeff = ex.weight() * loss.slope(y * params.margin(&ex.x)?) * y;
        if coeff != 0.0 {
            gw.iter_mut()
                .zip(ex.x.as_slice())
                .for_each(|(g, v)| *g += coeff * v);
            gb += coeff;
        }
    }
    Ok((gw, gb))
}

/// Runs gradient descent and returns the final parameters together with the
/// objective value before each epoch plus the final value.
///
/// Each step is `lr / W` times the gradient, where `W` is the total example
/// weight, so the step is invariant to uniformly rescaling weights and `l2`.
pub fn fit_with_trace(
    loss: Loss,
    examples: &[WeightedExample],
    cfg: &TrainConfig,
) -> Result<(ModelParams, Vec<f64>)> {
    cfg.validate()?;
    let first = examples.first().ok_or(LimeadeError::SingleClass)?;
    let dim = first.x.dim();
    for ex in examples {
        check_dim(dim, ex.x.dim())?;
    }
    let has_pos = examples.iter().any(|e| e.y == Label::Positive);
    let has_neg = examples.iter().any(|e| e.y == Label::Negative);
    if !(has_pos && has_neg) {
        return Err(LimeadeError::SingleClass);
    }
    let total_weight: f64 = examples.iter().map(WeightedExample::weight).sum();
    let step = cfg.learning_rate / total_weight;

    let mut params = ModelParams::zeros(dim);
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        let value = objective(loss, examples, &params, cfg.l2)?;
        if !value.is_finite() {
            return Err(LimeadeError::Divergence { epoch });
        }
        trace.push(value);
        let (gw, gb) = gradient(loss, examples, &params, cfg.l2)?;
        params
            .weights
            .iter_mut()
            .zip(&gw)
            .for_each(|(w, g)| *w -= step * g);
        params.bias -= step * gb;
    }
    let value = objective(loss, examples, &params, cfg.l2)?;
    if !value.is_finite() || params.weights.iter().any(|w| !w.is_finite()) {
        return Err(LimeadeError::Divergence { epoch: cfg.epochs });
    }
    trace.push(value);
    Ok((params, trace))
}
