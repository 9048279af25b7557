//! Turning feature-level advice into retraining data.
//!
//! One update takes an instance of interest `x`, an action `(j, a)` and a
//! candidate strategy. Candidates lacking feature `j` are discarded; the rest
//! become pseudo-examples labeled `a`, weighted by
//! `advice_weight * kernel(distance(candidate', x'))`, appended to the
//! labeled set, and the learner is retrained from scratch.

use std::cmp::Ordering;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::{
    cosine_similarity, interp_distance, kernel_weight, Dataset, DomainBridge, Instance, InterpVec,
    Label, OpaqueVec, ProximityKernel, WeightedExample,
};
use crate::error::{LimeadeError, Result};
use crate::explain::Contribution;
use crate::models::{ModelParams, OpaqueModel, TrainConfig};
use crate::seed;

pub type Polarity = Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviceAction {
    pub feature: usize,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sampled,
    Generated,
    Centroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoExample {
    pub x: OpaqueVec,
    pub x_interp: InterpVec,
    pub label: Polarity,
    pub weight: f64,
    pub provenance: Provenance,
    pub source_feature: usize,
}

impl PseudoExample {
    pub fn to_weighted(&self) -> Result<WeightedExample> {
        WeightedExample::new(self.x.clone(), self.label, self.weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    Interp,
    Opaque,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GetInstanceStrategy {
    PoolNearest { k: usize, similarity: Similarity },
    GenerativeMask { n: usize, keep_prob: f64 },
    CentroidTopActivation { pool_top: usize, k: usize },
}

impl GetInstanceStrategy {
    pub fn centroid() -> Self {
        GetInstanceStrategy::CentroidTopActivation { pool_top: 100, k: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GetInstanceStrategy::PoolNearest { k, .. } => k >= 1,
            GetInstanceStrategy::GenerativeMask { n, keep_prob } => {
                n >= 1 && keep_prob > 0.0 && keep_prob < 1.0
            }
            GetInstanceStrategy::CentroidTopActivation { pool_top, k } => pool_top >= 1 && k == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(LimeadeError::Value(format!("invalid strategy {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateReport {
    pub retained_count: usize,
    pub discarded_count: usize,
    pub new_params: ModelParams,
    pub added_examples: Vec<PseudoExample>,
}

/// The `k` pool instances most similar to `x`, most similar first, ties by
/// ascending id.
pub fn get_instances_pool(
    x: &Instance,
    pool: &[Instance],
    k: usize,
    similarity: Similarity,
) -> Result<Vec<Instance>> {
    if pool.is_empty() {
        return Err(LimeadeError::EmptyPool);
    }
    if k == 0 {
        return Err(LimeadeError::Value("k must be at least 1".into()));
    }
    let mut scored: Vec<(f64, &Instance)> = pool
        .iter()
        .map(|p| similarity_between(x, p, similarity).map(|s| (s, p)))
        .collect::<Result<_>>()?;
    let by_rank = |a: &(f64, &Instance), b: &(f64, &Instance)| -> Ordering {
        b.0.total_cmp(&a.0).then_with(|| a.1.id().cmp(b.1.id()))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, by_rank);
        scored.truncate(k);
    }
    scored.sort_by(by_rank);
    Ok(scored.into_iter().map(|(_, p)| p.clone()).collect())
}

fn similarity_between(a: &Instance, b: &Instance, similarity: Similarity) -> Result<f64> {
    match similarity {
        Similarity::Opaque => cosine_similarity(a.x(), b.x()),
        Similarity::Interp => {
            if a.interp().is_zero() && b.interp().is_zero() {
                Ok(1.0)
            } else {
                interp_distance(a.interp(), b.interp()).map(|d| 1.0 - d)
            }
        }
    }
}

/// `n` perturbations of `x`: each present feature is kept with probability
/// `keep_prob` and the mask is realized through the bridge.
pub fn get_instances_generative(
    x: &Instance,
    bridge: &dyn DomainBridge,
    n: usize,
    keep_prob: f64,
    seed: u64,
) -> Result<Vec<Instance>> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(LimeadeError::Value(format!("keep_prob out of range: {keep_prob}")));
    }
    let mut rng = seed::rng(seed);
    let dim = bridge.interp_dim();
    (0..n)
        .map(|i| {
            let mut mask = vec![false; dim];
            for &j in x.interp().present() {
                mask[j] = rng.random_bool(keep_prob);
            }
            bridge.realize_instance(x, &mask, format!("{}~gen{i}", x.id()))
        })
        .collect()
}

/// Condenses the `pool_top` instances with the highest activation of
/// `feature` (ties by ascending id) into one pseudo-example at their mean.
pub fn centroid_pseudoexample(
    pool: &[Instance],
    feature: usize,
    polarity: Polarity,
    pool_top: usize,
    advice_weight: f64,
) -> Result<PseudoExample> {
    if pool_top == 0 {
        return Err(LimeadeError::Value("pool_top must be at least 1".into()));
    }
    let mut holders: Vec<(f64, &Instance)> = pool
        .iter()
        .filter_map(|p| {
            let a = p.interp().get(feature);
            (a > 0.0).then_some((a, p))
        })
        .collect();
    if holders.is_empty() {
        return Err(LimeadeError::FeatureUnsupported { feature });
    }
    holders.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id().cmp(b.1.id())));
    holders.truncate(pool_top);
    let x = OpaqueVec::mean(holders.iter().map(|(_, p)| p.x()))?;
    let x_interp = InterpVec::mean(holders.iter().map(|(_, p)| p.interp()))?;
    Ok(PseudoExample {
        x,
        x_interp,
        label: polarity,
        weight: advice_weight,
        provenance: Provenance::Centroid,
        source_feature: feature,
    })
}

/// Inputs of one advice update that stay fixed across a session.
#[derive(Clone, Copy)]
pub struct UpdateContext<'a> {
    pub model: &'a dyn OpaqueModel,
    pub bridge: &'a dyn DomainBridge,
    pub kernel: ProximityKernel,
    pub advice_weight: f64,
    pub train: TrainConfig,
}

/// Applies one advice action and retrains.
///
/// The labeled set is only extended once retraining succeeds. When no
/// candidate carries the advised feature, nothing changes and `params_t`
/// is returned as-is.
pub fn limeade_update(
    ctx: &UpdateContext<'_>,
    params_t: &ModelParams,
    data: &mut Dataset,
    x: &Instance,
    action: AdviceAction,
    strategy: &GetInstanceStrategy,
    seed: u64,
) -> Result<UpdateReport> {
    strategy.validate()?;
    let s_prime = x.interp().dim();
    if action.feature >= s_prime {
        return Err(LimeadeError::Shape {
            expected: s_prime,
            got: action.feature + 1,
        });
    }
    if !(ctx.advice_weight.is_finite() && ctx.advice_weight > 0.0) {
        return Err(LimeadeError::Value(format!(
            "advice weight must be positive, got {}",
            ctx.advice_weight
        )));
    }

    let (candidates, provenance): (Vec<(OpaqueVec, InterpVec)>, Provenance) = match *strategy {
        GetInstanceStrategy::PoolNearest { k, similarity } => (
            get_instances_pool(x, data.pool(), k, similarity)?
                .into_iter()
                .map(|i| (i.x().clone(), i.interp().clone()))
                .collect(),
            Provenance::Sampled,
        ),
        GetInstanceStrategy::GenerativeMask { n, keep_prob } => (
            get_instances_generative(x, ctx.bridge, n, keep_prob, seed)?
                .into_iter()
                .map(|i| (i.x().clone(), i.interp().clone()))
                .collect(),
            Provenance::Generated,
        ),
        GetInstanceStrategy::CentroidTopActivation { pool_top, .. } => {
            let c = centroid_pseudoexample(
                data.pool(),
                action.feature,
                action.polarity,
                pool_top,
                ctx.advice_weight,
            )?;
            (vec![(c.x, c.x_interp)], Provenance::Centroid)
        }
    };

    let total = candidates.len();
    let mut added = Vec::new();
    for (cx, ci) in candidates {
        if !ci.is_present(action.feature) {
            continue;
        }
        let weight = match provenance {
            Provenance::Centroid => ctx.advice_weight,
            _ => ctx.advice_weight * kernel_weight(interp_distance(&ci, x.interp())?, &ctx.kernel),
        };
        added.push(PseudoExample {
            x: cx,
            x_interp: ci,
            label: action.polarity,
            weight,
            provenance,
            source_feature: action.feature,
        });
    }

    if added.is_empty() {
        return Ok(UpdateReport {
            retained_count: 0,
            discarded_count: total,
            new_params: params_t.clone(),
            added_examples: added,
        });
    }

    let new_examples: Vec<WeightedExample> =
        added.iter().map(PseudoExample::to_weighted).collect::<Result<_>>()?;
    let mut training = data.labeled().to_vec();
    training.extend(new_examples.iter().cloned());
    let new_params = ctx.model.fit(&training, &ctx.train)?;
    data.extend_labeled(new_examples);

    Ok(UpdateReport {
        retained_count: added.len(),
        discarded_count: total - added.len(),
        new_params,
        added_examples: added,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdviceCase {
    /// A positive instance: endorse a ground-truth feature.
    FalseNegative,
    /// A negative instance: reject the most influential non-truth feature.
    FalsePositive,
}

/// Simulated oracle advice for one explained instance.
pub fn simulate_advice_for_instance(
    truth: &[usize],
    explanation: &[Contribution],
    case: AdviceCase,
) -> Result<AdviceAction> {
    match case {
        AdviceCase::FalseNegative => truth
            .iter()
            .min()
            .map(|&feature| AdviceAction {
                feature,
                polarity: Label::Positive,
            })
            .ok_or(LimeadeError::NoAdviceAvailable),
        AdviceCase::FalsePositive => explanation
            .iter()
            .filter(|c| !truth.contains(&c.feature) && c.value != 0.0)
            .min_by(|a, b| {
                b.value
                    .abs()
                    .total_cmp(&a.value.abs())
                    .then(a.feature.cmp(&b.feature))
            })
            .map(|c| AdviceAction {
                feature: c.feature,
                polarity: Label::Negative,
            })
            .ok_or(LimeadeError::NoAdviceAvailable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(id: &str, x: &[f64], interp: &[f64]) -> Instance {
        Instance::paired(
            id,
            OpaqueVec::new(x.to_vec()).unwrap(),
            InterpVec::from_dense(interp).unwrap(),
        )
    }

    #[test]
    fn pool_returns_duplicate_first() {
        let x = inst("q", &[1.0, 2.0], &[1.0, 0.0]);
        let pool = vec![
            inst("a", &[2.0, -1.0], &[0.0, 1.0]),
            inst("b", &[1.0, 2.0], &[1.0, 0.0]),
            inst("c", &[1.0, 1.0], &[1.0, 1.0]),
        ];
        let got = get_instances_pool(&x, &pool, 1, Similarity::Opaque).unwrap();
        assert_eq!(got[0].id(), "b");
    }

    #[test]
    fn pool_order_matches_brute_force_sort() {
        let x = inst("q", &[1.0, 0.0, 1.0], &[1.0]);
        let pool = vec![
            inst("p1", &[0.0, 1.0, 0.0], &[1.0]),  // cos 0
            inst("p2", &[1.0, 1.0, 1.0], &[1.0]),  // cos 2/sqrt(6) = 0.8165
            inst("p3", &[1.0, 0.0, 0.5], &[1.0]),  // cos 1.5/sqrt(2.5)/sqrt(2) = 0.9487
        ];
        let got: Vec<String> = get_instances_pool(&x, &pool, 3, Similarity::Opaque)
            .unwrap()
            .iter()
            .map(|i| i.id().to_string())
            .collect();
        assert_eq!(got, vec!["p3", "p2", "p1"]);
    }

    #[test]
    fn pool_ties_break_by_id() {
        let x = inst("q", &[1.0, 0.0], &[1.0]);
        let pool = vec![inst("z", &[2.0, 0.0], &[1.0]), inst("m", &[3.0, 0.0], &[1.0])];
        let got = get_instances_pool(&x, &pool, 2, Similarity::Opaque).unwrap();
        assert_eq!(got[0].id(), "m");
        assert_eq!(get_instances_pool(&x, &[], 1, Similarity::Opaque), Err(LimeadeError::EmptyPool));
    }

    #[test]
    fn centroid_examples() {
        let pool = vec![
            inst("d1", &[1.0, 0.0], &[0.9]),
            inst("d2", &[0.0, 1.0], &[0.5]),
            inst("d3", &[2.0, 2.0], &[0.1]),
        ];
        let all = centroid_pseudoexample(&pool, 0, Label::Positive, 100, 1.0).unwrap();
        assert_eq!(all.x.as_slice(), &[1.0, 1.0]);
        assert_eq!(all.provenance, Provenance::Centroid);
        let top2 = centroid_pseudoexample(&pool, 0, Label::Negative, 2, 0.5).unwrap();
        assert_eq!(top2.x.as_slice(), &[0.5, 0.5]);
        assert_eq!(top2.label, Label::Negative);
        assert_eq!(top2.weight, 0.5);
        let absent = vec![inst("d1", &[1.0, 0.0], &[0.0, 1.0])];
        assert_eq!(
            centroid_pseudoexample(&absent, 0, Label::Positive, 100, 1.0),
            Err(LimeadeError::FeatureUnsupported { feature: 0 })
        );
    }

    #[test]
    fn simulated_advice_examples() {
        let a = simulate_advice_for_instance(&[7, 3], &[], AdviceCase::FalseNegative).unwrap();
        assert_eq!(a, AdviceAction { feature: 3, polarity: Label::Positive });
        let contribs = [
            Contribution { feature: 5, value: 0.9 },
            Contribution { feature: 2, value: -0.4 },
        ];
        let b = simulate_advice_for_instance(&[2], &contribs, AdviceCase::FalsePositive).unwrap();
        assert_eq!(b, AdviceAction { feature: 5, polarity: Label::Negative });
        assert_eq!(
            simulate_advice_for_instance(&[], &contribs, AdviceCase::FalseNegative),
            Err(LimeadeError::NoAdviceAvailable)
        );
        assert_eq!(
            simulate_advice_for_instance(&[5], &contribs[..1], AdviceCase::FalsePositive),
            Err(LimeadeError::NoAdviceAvailable)
        );
    }

    #[test]
    fn strategy_validation() {
        assert!(GetInstanceStrategy::centroid().validate().is_ok());
        assert!(GetInstanceStrategy::PoolNearest { k: 0, similarity: Similarity::Opaque }
            .validate()
            .is_err());
        assert!(GetInstanceStrategy::GenerativeMask { n: 3, keep_prob: 1.0 }.validate().is_err());
    }
}
