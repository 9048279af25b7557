//! Linear surrogate explanations and display-term selection.
//!
//! A surrogate is `g(x') = w0 + sum_i w_i x'_i` over the interpretable
//! vocabulary. Local surrogates are fit to the opaque model's scores on
//! random feature masks around one instance; the global surrogate is fit to
//! scores over a whole corpus. Display selection picks at most `n_display`
//! terms, either greedily by contribution magnitude or by sampling with
//! probability proportional to `|contribution|^gamma`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::{
    check_dim, interp_distance, kernel_weight, DomainBridge, Instance, InterpVec, ProximityKernel,
};
use crate::error::{LimeadeError, Result};
use crate::linalg::{sparse_ridge, weighted_ridge};
use crate::models::{ModelParams, OpaqueModel};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scope {
    Local { anchor: String },
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub scope: Scope,
}

impl Surrogate {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn evaluate(&self, x: &InterpVec) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.intercept + x.iter().map(|(j, v)| self.weights[j] * v).sum::<f64>())
    }
}

/// `w_j * x'_j` for one present feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayTerm {
    pub feature: usize,
    pub term: String,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub instance_id: String,
    pub terms: Vec<DisplayTerm>,
}

/// Selection sharpness. `Infinite` is deterministic greedy selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Finite(4.0)
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = LimeadeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "greedy" => Ok(Gamma::Infinite),
            other => match other.parse::<f64>() {
                Ok(g) if g.is_infinite() && g > 0.0 => Ok(Gamma::Infinite),
                Ok(g) if g.is_finite() && g >= 0.0 => Ok(Gamma::Finite(g)),
                _ => Err(LimeadeError::Value(format!("invalid gamma {s:?}"))),
            },
        }
    }
}

/// Finite values serialize as numbers, `Infinite` as `"inf"`.
impl Serialize for Gamma {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gamma::Finite(g) => s.serialize_f64(*g),
            Gamma::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(g) => g.to_string(),
            Raw::Str(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Perturbation samples behind a local surrogate.
#[derive(Debug, Clone)]
pub struct LocalSamples {
    /// Features that were perturbed (present in the anchor), ascending.
    pub features: Vec<usize>,
    /// One row per sample; `masks[i][k]` keeps `features[k]`.
    pub masks: Vec<Vec<bool>>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn fit_local_surrogate(
    model: &dyn OpaqueModel,
    params: &ModelParams,
    base: &Instance,
    bridge: &dyn DomainBridge,
    n_samples: usize,
    kernel: &ProximityKernel,
    ridge_lambda: f64,
    seed: u64,
) -> Result<Surrogate> {
    fit_local_surrogate_with_samples(model, params, base, bridge, n_samples, kernel, ridge_lambda, seed)
        .map(|(g, _)| g)
}

/// LIME-style local fit. The first mask keeps every present feature; the
/// rest keep each present feature independently with probability 0.5.
/// Absent features are never perturbed and get zero weight.
#[allow(clippy::too_many_arguments)]
pub fn fit_local_surrogate_with_samples(
    model: &dyn OpaqueModel,
    params: &ModelParams,
    base: &Instance,
    bridge: &dyn DomainBridge,
    n_samples: usize,
    kernel: &ProximityKernel,
    ridge_lambda: f64,
    seed: u64,
) -> Result<(Surrogate, LocalSamples)> {
    let dim = bridge.interp_dim();
    check_dim(dim, base.interp().dim())?;
    let features = base.interp().present().to_vec();
    let needed = features.len() + 2;
    if n_samples < needed {
        return Err(LimeadeError::InsufficientSamples {
            needed,
            got: n_samples,
        });
    }

    if features.is_empty() {
        // Nothing to perturb: every sample is the anchor itself, and the
        // exact fit is the constant model at the anchor's score.
        let y = model.score(params, base.x())?;
        let surrogate = Surrogate {
            intercept: y,
            weights: vec![0.0; dim],
            scope: Scope::Local {
                anchor: base.id().to_string(),
            },
        };
        let samples = LocalSamples {
            features,
            masks: vec![Vec::new(); n_samples],
            targets: vec![y; n_samples],
            weights: vec![1.0; n_samples],
        };
        return Ok((surrogate, samples));
    }

    let mut rng = seed::rng(seed);
    let mut masks = Vec::with_capacity(n_samples);
    masks.push(vec![true; features.len()]);
    for _ in 1..n_samples {
        masks.push((0..features.len()).map(|_| rng.random_bool(0.5)).collect::<Vec<bool>>());
    }
    let distinct: HashSet<&Vec<bool>> = masks.iter().collect();
    if distinct.len() < 2 {
        return Err(LimeadeError::InsufficientSamples {
            needed: 2,
            got: distinct.len(),
        });
    }

    let mut targets = Vec::with_capacity(n_samples);
    let mut weights = Vec::with_capacity(n_samples);
    let mut full_mask = vec![false; dim];
    for mask in &masks {
        full_mask.iter_mut().for_each(|m| *m = false);
        for (k, &keep) in mask.iter().enumerate() {
            full_mask[features[k]] = keep;
        }
        let x = bridge.realize(base, &full_mask)?;
        targets.push(model.score(params, &x)?);
        let masked = base.interp().masked(&full_mask)?;
        weights.push(kernel_weight(interp_distance(&masked, base.interp())?, kernel));
    }

    let design = DMatrix::from_fn(n_samples, features.len(), |i, k| {
        if masks[i][k] {
            1.0
        } else {
            0.0
        }
    });
    let fit = weighted_ridge(&design, &targets, Some(&weights), ridge_lambda)?;
    let mut full = vec![0.0; dim];
    for (k, &j) in features.iter().enumerate() {
        full[j] = fit.coef[k];
    }
    let surrogate = Surrogate {
        intercept: fit.intercept,
        weights: full,
        scope: Scope::Local {
            anchor: base.id().to_string(),
        },
    };
    Ok((
        surrogate,
        LocalSamples {
            features,
            masks,
            targets,
            weights,
        },
    ))
}

/// Unweighted ridge regression of corpus scores on interpretable
/// activations. Only columns with some nonzero activation enter the system;
/// the rest get weight zero, which is their exact ridge solution.
pub fn fit_global_surrogate(scores: &[f64], rows: &[InterpVec], ridge_lambda: f64) -> Result<Surrogate> {
    if rows.len() < 2 {
        return Err(LimeadeError::InsufficientSamples {
            needed: 2,
            got: rows.len(),
        });
    }
    if scores.len() != rows.len() {
        return Err(LimeadeError::Shape {
            expected: rows.len(),
            got: scores.len(),
        });
    }
    let dim = rows[0].dim();
    for r in rows {
        check_dim(dim, r.dim())?;
    }
    let mut active: Vec<usize> = rows.iter().flat_map(|r| r.present().iter().copied()).collect();
    active.sort_unstable();
    active.dedup();
    let mut column_of = vec![usize::MAX; dim];
    for (c, &j) in active.iter().enumerate() {
        column_of[j] = c;
    }
    let sparse_rows: Vec<Vec<(usize, f64)>> = rows
        .iter()
        .map(|r| r.iter().map(|(j, v)| (column_of[j], v)).collect())
        .collect();
    let fit = sparse_ridge(&sparse_rows, active.len(), scores, ridge_lambda)?;
    let mut weights = vec![0.0; dim];
    for (c, &j) in active.iter().enumerate() {
        weights[j] = fit.coef[c];
    }
    Ok(Surrogate {
        intercept: fit.intercept,
        weights,
        scope: Scope::Global,
    })
}

/// Nonzero per-feature contributions `w_j * x'_j`, in feature order.
pub fn contributions(g: &Surrogate, x_interp: &InterpVec) -> Result<Vec<Contribution>> {
    check_dim(g.dim(), x_interp.dim())?;
    Ok(x_interp
        .iter()
        .map(|(j, v)| Contribution {
            feature: j,
            value: g.weights[j] * v,
        })
        .filter(|c| c.value != 0.0)
        .collect())
}

/// Picks up to `n_display` terms without replacement.
///
/// With a finite `gamma`, each draw picks a remaining candidate with
/// probability proportional to `|value|^gamma`. After every pick, remaining
/// candidates whose term shares the picked term's stem are dropped and the
/// probabilities renormalize over what is left. `Gamma::Infinite` takes the
/// largest `|value|` each time (ties by feature index).
pub fn select_display_terms<T, S>(
    instance_id: &str,
    contribs: &[Contribution],
    n_display: usize,
    gamma: Gamma,
    seed: u64,
    term_of: T,
    stem_fn: S,
) -> Result<Explanation>
where
    T: Fn(usize) -> String,
    S: Fn(&str) -> String,
{
    if n_display == 0 {
        return Err(LimeadeError::Value("n_display must be at least 1".into()));
    }
    let mut candidates: Vec<(Contribution, String, String)> = contribs
        .iter()
        .map(|c| {
            let term = term_of(c.feature);
            let stem = stem_fn(&term);
            (*c, term, stem)
        })
        .collect();
    // Greedy order doubles as the canonical candidate order for sampling.
    candidates.sort_by(|a, b| {
        b.0.value
            .abs()
            .total_cmp(&a.0.value.abs())
            .then(a.0.feature.cmp(&b.0.feature))
    });

    let mut rng = seed::rng(seed);
    let mut terms = Vec::with_capacity(n_display);
    while terms.len() < n_display && !candidates.is_empty() {
        let pick = match gamma {
            Gamma::Infinite => 0,
            Gamma::Finite(g) => sample_index(&candidates, g, &mut rng),
        };
        let (c, term, stem) = candidates.remove(pick);
        candidates.retain(|(_, _, s)| *s != stem);
        terms.push(DisplayTerm {
            feature: c.feature,
            term,
            contribution: c.value,
        });
    }
    Ok(Explanation {
        instance_id: instance_id.to_string(),
        terms,
    })
}

fn sample_index(candidates: &[(Contribution, String, String)], gamma: f64, rng: &mut seed::Rng) -> usize {
    // Log-space weights avoid underflow for large gamma.
    let logw: Vec<f64> = candidates
        .iter()
        .map(|(c, _, _)| {
            if gamma == 0.0 {
                0.0
            } else {
                gamma * c.value.abs().ln()
            }
        })
        .collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return 0;
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, wi) in w.iter().enumerate() {
        if u < *wi {
            return i;
        }
        u -= wi;
    }
    w.len() - 1
}

const SUFFIXES: [&str; 8] = ["nesses", "ness", "ities", "ity", "ing", "ed", "es", "s"];

/// Light suffix-stripping stemmer used to deduplicate display terms.
/// Bigrams are stemmed word by word.
pub fn stem(term: &str) -> String {
    if term.contains(' ') {
        return term.split(' ').map(stem_word).collect::<Vec<_>>().join(" ");
    }
    stem_word(term)
}

fn stem_word(word: &str) -> String {
    let Some(suffix) = SUFFIXES.iter().find(|s| word.len() > s.len() && word.ends_with(*s)) else {
        return word.to_string();
    };
    let mut base = word[..word.len() - suffix.len()].to_string();
    if *suffix == "ing" {
        if base.chars().count() < 3 {
            base.push('e');
        } else {
            let b = base.as_bytes();
            let (last, prev) = (b[b.len() - 1], b[b.len() - 2]);
            if last == prev && last.is_ascii_alphabetic() && !b"aeiou".contains(&last) {
                base.pop();
            }
        }
    }
    if base.chars().count() < 3 {
        word.to_string()
    } else {
        base
    }
}
