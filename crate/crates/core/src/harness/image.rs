//! Few-shot classifier study: does part-level advice beat one more labeled
//! pair?
//!
//! Per class and seed, a logistic model is trained on one positive and one
//! negative pool instance. The baseline arm adds a further drawn positive
//! and negative as labeled examples. The LIMEADE arm instead receives advice
//! about those same two instances: a thumbs-up on a ground-truth object part
//! of the positive, and a thumbs-down on the most influential non-object
//! part in a local explanation of the negative. Both arms report the change
//! in held-out accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{holm_adjust, Arm, Comparison, ResultRow};
use super::synthetic::{gen_synthetic_domain, SyntheticDomain, SyntheticDomainSpec};
use crate::advice::{
    limeade_update, simulate_advice_for_instance, AdviceCase, GetInstanceStrategy, Similarity, UpdateContext,
};
use crate::domain::{Dataset, Instance, Label, ProximityKernel, WeightedExample};
use crate::error::{LimeadeError, Result};
use crate::explain::{contributions, fit_local_surrogate};
use crate::metrics;
use crate::models::{Logistic, ModelParams, OpaqueModel, TrainConfig};
use crate::seed;

pub const STUDY: &str = "image";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImageStudyConfig {
    pub n_classes: usize,
    pub n_seeds: usize,
    pub neighbors: usize,
    pub advice_weight: f64,
    pub similarity: Similarity,
    pub master_seed: u64,
    /// Initial labeled examples, split evenly between the classes.
    pub shots: usize,
    /// Give the LIMEADE arm the extra labeled pair as well as the advice.
    pub combined_arm: bool,
    pub confound_rate: f64,
    pub n_object_parts: usize,
    pub n_confound_parts: usize,
    pub pool_size: usize,
    pub test_per_class: usize,
    pub lime_samples: usize,
    pub ridge_lambda: f64,
    pub kernel_sigma: f64,
    pub train: TrainConfig,
}

impl Default for ImageStudyConfig {
    fn default() -> Self {
        Self {
            n_classes: 20,
            n_seeds: 100,
            neighbors: 50,
            advice_weight: 0.25,
            similarity: Similarity::Opaque,
            master_seed: 7,
            shots: 2,
            combined_arm: false,
            confound_rate: 0.9,
            n_object_parts: 3,
            n_confound_parts: 3,
            pool_size: 2000,
            test_per_class: 200,
            lime_samples: 256,
            ridge_lambda: 0.01,
            kernel_sigma: ProximityKernel::DEFAULT_SIGMA,
            train: TrainConfig::default(),
        }
    }
}

impl ImageStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.n_seeds < 2 {
            return Err(LimeadeError::Value("need at least 1 class and 2 seeds".into()));
        }
        if self.shots < 2 || self.shots & 1 == 1 {
            return Err(LimeadeError::Value(format!("shots must be even and >= 2, got {}", self.shots)));
        }
        if !(self.advice_weight.is_finite() && self.advice_weight >= 0.0) {
            return Err(LimeadeError::Value("advice weight must be nonnegative".into()));
        }
        Ok(())
    }

    fn domain_spec(&self, class: usize) -> SyntheticDomainSpec {
        let mut spec = SyntheticDomainSpec::for_class(
            seed::derive(self.master_seed, &[1, class as u64, 0]),
            self.n_object_parts,
            self.n_confound_parts,
        );
        spec.confound_rate = self.confound_rate;
        spec.pool_size = self.pool_size;
        spec.test_per_class = self.test_per_class;
        spec
    }
}

/// Accuracies of one (class, seed) run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub initial_accuracy: f64,
    pub baseline_accuracy: f64,
    pub limeade_accuracy: f64,
    pub retained: usize,
}

impl RunOutcome {
    pub fn baseline_delta(&self) -> f64 {
        self.baseline_accuracy - self.initial_accuracy
    }

    pub fn limeade_delta(&self) -> f64 {
        self.limeade_accuracy - self.initial_accuracy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: usize,
    pub object_parts: Vec<usize>,
    pub confound_parts: Vec<usize>,
    pub runs: usize,
    pub skipped: usize,
    pub two_shot_accuracy: f64,
    pub delta: Comparison,
    pub winner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub config: ImageStudyConfig,
    pub classes: Vec<ClassSummary>,
    pub aggregate: Comparison,
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct ImageStudyResult {
    pub rows: Vec<ResultRow>,
    pub summary: ImageSummary,
}

pub fn accuracy(model: &dyn OpaqueModel, params: &ModelParams, xs: &[Instance], ys: &[Label]) -> Result<f64> {
    let mut hits = 0usize;
    for (x, &y) in xs.iter().zip(ys) {
        if model.predict(params, x.x())? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / xs.len().max(1) as f64)
}

/// One run. Returns `Ok(None)` when the oracle has no advice to give.
pub fn run_once(cfg: &ImageStudyConfig, domain: &SyntheticDomain, run_seed: u64) -> Result<Option<RunOutcome>> {
    use rand::seq::SliceRandom;

    let model = Logistic;
    let mut rng = seed::rng(run_seed);
    let mut pos: Vec<usize> = (0..domain.pool.len()).filter(|&i| domain.pool_labels[i] == Label::Positive).collect();
    let mut neg: Vec<usize> = (0..domain.pool.len()).filter(|&i| domain.pool_labels[i] == Label::Negative).collect();
    let per_class = cfg.shots / 2;
    if pos.len() < per_class + 1 || neg.len() < per_class + 1 {
        return Err(LimeadeError::Value("pool too small for the requested shots".into()));
    }
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let (train_pos, extra_pos) = (&pos[..per_class], pos[per_class]);
    let (train_neg, extra_neg) = (&neg[..per_class], neg[per_class]);

    let labeled = |i: usize| WeightedExample::unit(domain.pool[i].x().clone(), domain.pool_labels[i]);
    let initial: Vec<WeightedExample> = train_pos.iter().chain(train_neg).map(|&i| labeled(i)).collect();
    let params0 = model.fit(&initial, &cfg.train)?;
    let acc0 = accuracy(&model, &params0, &domain.test, &domain.test_labels)?;

    let mut extended = initial.clone();
    extended.push(labeled(extra_pos));
    extended.push(labeled(extra_neg));
    let params_b = model.fit(&extended, &cfg.train)?;
    let acc_b = accuracy(&model, &params_b, &domain.test, &domain.test_labels)?;

    let pos_inst = &domain.pool[extra_pos];
    let neg_inst = &domain.pool[extra_neg];
    let kernel = ProximityKernel::new(cfg.kernel_sigma)?;
    let bridge = &domain.bridge;

    // Both explanations come from the initial model, before any update.
    let g = fit_local_surrogate(
        &model,
        &params0,
        neg_inst,
        bridge,
        cfg.lime_samples,
        &kernel,
        cfg.ridge_lambda,
        seed::derive(run_seed, &[1]),
    )?;
    let neg_contribs = contributions(&g, neg_inst.interp())?;
    let pos_action = simulate_advice_for_instance(domain.truth(Label::Positive), &[], AdviceCase::FalseNegative);
    let neg_action = simulate_advice_for_instance(domain.truth(Label::Negative), &neg_contribs, AdviceCase::FalsePositive);
    let (pos_action, neg_action) = match (pos_action, neg_action) {
        (Ok(p), Ok(n)) => (p, n),
        (Err(LimeadeError::NoAdviceAvailable), _) | (_, Err(LimeadeError::NoAdviceAvailable)) => return Ok(None),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };

    let drawn: Vec<usize> = train_pos.iter().chain(train_neg).copied().chain([extra_pos, extra_neg]).collect();
    let pool: Vec<Instance> = domain
        .pool
        .iter()
        .enumerate()
        .filter(|(i, _)| !drawn.contains(i))
        .map(|(_, p)| p.clone())
        .collect();
    let start = if cfg.combined_arm { extended } else { initial };
    let mut params_l = if cfg.combined_arm { params_b.clone() } else { params0.clone() };
    let mut retained = 0;
    if cfg.advice_weight > 0.0 {
        let mut data = Dataset::new(start, pool)?;
        let ctx = UpdateContext {
            model: &model,
            bridge,
            kernel,
            advice_weight: cfg.advice_weight,
            train: cfg.train,
        };
        let strategy = GetInstanceStrategy::PoolNearest {
            k: cfg.neighbors,
            similarity: cfg.similarity,
        };
        for (step, (inst, action)) in [(pos_inst, pos_action), (neg_inst, neg_action)].into_iter().enumerate() {
            let report = limeade_update(
                &ctx,
                &params_l,
                &mut data,
                inst,
                action,
                &strategy,
                seed::derive(run_seed, &[2, step as u64]),
            )?;
            retained += report.retained_count;
            params_l = report.new_params;
        }
    }
    let acc_l = accuracy(&model, &params_l, &domain.test, &domain.test_labels)?;

    Ok(Some(RunOutcome {
        initial_accuracy: acc0,
        baseline_accuracy: acc_b,
        limeade_accuracy: acc_l,
        retained,
    }))
}

pub fn run_image_study(cfg: &ImageStudyConfig) -> Result<ImageStudyResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut classes = Vec::with_capacity(cfg.n_classes);
    let mut all_b = Vec::new();
    let mut all_l = Vec::new();
    let mut skipped_total = 0;
    for class in 0..cfg.n_classes {
        let spec = cfg.domain_spec(class);
        let domain = gen_synthetic_domain(&spec, seed::derive(cfg.master_seed, &[1, class as u64, 1]))?;
        let outcomes: Vec<Option<RunOutcome>> = (0..cfg.n_seeds)
            .into_par_iter()
            .map(|s| run_once(cfg, &domain, seed::derive(cfg.master_seed, &[1, class as u64, 2, s as u64])))
            .collect::<Result<_>>()?;
        let group = format!("class_{class:02}");
        let (mut db, mut dl, mut acc0) = (Vec::new(), Vec::new(), Vec::new());
        for (s, o) in outcomes.iter().enumerate() {
            let Some(o) = o else { continue };
            for arm in [Arm::Baseline, Arm::Limeade] {
                let delta = match arm {
                    Arm::Baseline => o.baseline_delta(),
                    Arm::Limeade => o.limeade_delta(),
                };
                rows.push(ResultRow::new(STUDY, group.clone(), s as u64, arm.as_str(), "initial_accuracy", o.initial_accuracy));
                rows.push(ResultRow::new(STUDY, group.clone(), s as u64, arm.as_str(), "delta_accuracy", delta));
            }
            db.push(o.baseline_delta());
            dl.push(o.limeade_delta());
            acc0.push(o.initial_accuracy);
        }
        let skipped = outcomes.iter().filter(|o| o.is_none()).count();
        skipped_total += skipped;
        let delta = Comparison::paired(&db, &dl);
        classes.push(ClassSummary {
            class,
            object_parts: spec.object_parts.clone(),
            confound_parts: spec.confound_parts.clone(),
            runs: db.len(),
            skipped,
            two_shot_accuracy: metrics::mean(&acc0),
            winner: delta.winner().to_string(),
            delta,
        });
        all_b.extend(db);
        all_l.extend(dl);
    }
    holm_adjust(classes.iter_mut().map(|c| &mut c.delta))?;
    let aggregate = Comparison::paired(&all_b, &all_l);
    Ok(ImageStudyResult {
        rows,
        summary: ImageSummary {
            config: cfg.clone(),
            classes,
            aggregate,
            skipped: skipped_total,
        },
    })
}

/// Table-shaped text rendering of the summary.
pub fn render_table(s: &ImageSummary) -> String {
    let mut out = format!(
        "{:<6} {:>9} {:>17} {:>17} {:>9} {:>9} {:>9}\n",
        "class", "2-shot", "d baseline", "d limeade", "p", "adj p", "winner"
    );
    let fmt_p = |p: Option<f64>| p.map_or("-".to_string(), |p| format!("{p:.4}"));
    for c in &s.classes {
        out += &format!(
            "{:<6} {:>9.4} {:>8.4} ± {:<6.4} {:>8.4} ± {:<6.4} {:>9} {:>9} {:>9}\n",
            c.class,
            c.two_shot_accuracy,
            c.delta.baseline.mean,
            c.delta.baseline.se,
            c.delta.limeade.mean,
            c.delta.limeade.se,
            fmt_p(c.delta.p),
            fmt_p(c.delta.adjusted_p),
            c.winner
        );
    }
    out += &format!(
        "{:<6} {:>9} {:>8.4} ± {:<6.4} {:>8.4} ± {:<6.4} {:>9} {:>9} {:>9}\n",
        "all",
        "",
        s.aggregate.baseline.mean,
        s.aggregate.baseline.se,
        s.aggregate.limeade.mean,
        s.aggregate.limeade.se,
        fmt_p(s.aggregate.p),
        "",
        s.aggregate.winner()
    );
    out
}
