//! Explanation/action tradeoff in a simulated feed session.
//!
//! A reader starts a feed from a few seed papers, then repeatedly gives a
//! thumbs-up to a displayed term related to the topic they like. Each
//! display policy (greedy or sampled) gets its own copy of the session from
//! the same starting model, and the reader can only act on terms that policy
//! shows. Before the first action and after each one, the global surrogate
//! is refit and the number of distinct terms shown across the top papers is
//! recorded.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{gen_corpus, CorpusSpec, SyntheticCorpus};
use super::report::{ResultRow, Stat};
use crate::advice::{limeade_update, AdviceAction, GetInstanceStrategy, UpdateContext};
use crate::domain::{Dataset, InterpVec, Label, ProximityKernel, WeightedExample};
use crate::error::{LimeadeError, Result};
use crate::explain::{contributions, fit_global_surrogate, select_display_terms, stem, Explanation, Gamma};
use crate::metrics::{self, TTest};
use crate::models::{HingeRanker, OpaqueModel, TrainConfig};
use crate::seed;
use crate::text::TextCorpus;

pub const STUDY: &str = "tradeoff";
pub const GREEDY: &str = "greedy";
pub const SAMPLED: &str = "sampled";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TradeoffConfig {
    pub n_sessions: usize,
    pub actions: usize,
    pub gamma: Gamma,
    pub top_papers: usize,
    pub n_display: usize,
    pub seed_papers: usize,
    pub ridge_lambda: f64,
    pub advice_weight: f64,
    pub pool_top: usize,
    pub corpus: CorpusSpec,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub master_seed: u64,
    pub train: TrainConfig,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        Self {
            n_sessions: 100,
            actions: 20,
            gamma: Gamma::Finite(4.0),
            top_papers: 8,
            n_display: 4,
            seed_papers: 3,
            ridge_lambda: 0.01,
            advice_weight: 1.0,
            pool_top: 100,
            corpus: CorpusSpec {
                n_docs: 400,
                n_topics: 10,
                words_per_topic: 40,
                ..CorpusSpec::default()
            },
            vocab_size: 500,
            embed_dim: 64,
            master_seed: 7,
            train: TrainConfig::default(),
        }
    }
}

impl TradeoffConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sessions < 2 || self.top_papers == 0 || self.n_display == 0 || self.seed_papers == 0 {
            return Err(LimeadeError::Value("need >= 2 sessions and nonzero display sizes".into()));
        }
        if self.gamma == Gamma::Infinite {
            return Err(LimeadeError::Value("the sampled policy needs a finite gamma".into()));
        }
        Ok(())
    }
}

pub fn unique_terms(explanations: &[Explanation]) -> usize {
    explanations
        .iter()
        .flat_map(|e| e.terms.iter().map(|t| t.term.as_str()))
        .collect::<BTreeSet<_>>()
        .len()
}

/// One policy's run of a session: the display at every step and the
/// actions taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTrace {
    pub steps: Vec<Vec<Explanation>>,
    pub acted: Vec<(String, Label)>,
}

impl PolicyTrace {
    pub fn unique_counts(&self) -> Vec<f64> {
        self.steps.iter().map(|s| unique_terms(s) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub session: usize,
    pub liked: usize,
    pub greedy: PolicyTrace,
    pub sampled: PolicyTrace,
}

/// Ordinary least-squares slope of `ys` against `0, 1, 2, ...`.
pub fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let xm = (n - 1.0) / 2.0;
    let ym = metrics::mean(ys);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffSummary {
    pub config: TradeoffConfig,
    pub greedy_slope: Stat,
    pub sampled_slope: Stat,
    /// Paired test of greedy minus sampled slopes.
    pub t: Option<f64>,
    pub p: Option<f64>,
    /// Mean unique-term counts per step.
    pub greedy_curve: Vec<f64>,
    pub sampled_curve: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TradeoffResult {
    pub rows: Vec<ResultRow>,
    pub summary: TradeoffSummary,
    pub traces: Vec<SessionTrace>,
}

fn display(
    cfg: &TradeoffConfig,
    text: &TextCorpus,
    scores: &[f64],
    rated: &[usize],
    gamma: Gamma,
    display_seed: u64,
) -> Result<Vec<Explanation>> {
    let rows: Vec<InterpVec> = text.instances().iter().map(|i| i.interp().clone()).collect();
    let g = fit_global_surrogate(scores, &rows, cfg.ridge_lambda)?;
    let mut order: Vec<usize> = (0..text.len()).filter(|i| !rated.contains(i)).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| text.instances()[a].id().cmp(text.instances()[b].id()))
    });
    let term_of = |j: usize| text.vocab().term(j).to_string();
    order
        .iter()
        .take(cfg.top_papers)
        .map(|&i| {
            let inst = &text.instances()[i];
            let c = contributions(&g, inst.interp())?;
            let s = seed::derive(display_seed, &[i as u64]);
            select_display_terms(inst.id(), &c, cfg.n_display, gamma, s, term_of, stem)
        })
        .collect()
}

/// Seed papers (liked topic, positive) and as many off-topic negatives.
fn session_start(synth: &SyntheticCorpus, n_docs: usize, seed_papers: usize, rng: &mut seed::Rng) -> (usize, Vec<usize>, Vec<usize>) {
    let liked = rng.random_range(0..synth.topic_words.len());
    let mut on: Vec<usize> = (0..n_docs).filter(|&i| synth.primary[i] == liked).collect();
    let mut off: Vec<usize> = (0..n_docs).filter(|&i| synth.primary[i] != liked).collect();
    on.shuffle(rng);
    off.shuffle(rng);
    let seeds: Vec<usize> = on.into_iter().take(seed_papers).collect();
    let negatives: Vec<usize> = off.into_iter().take(seeds.len()).collect();
    (liked, seeds, negatives)
}

fn run_policy(
    cfg: &TradeoffConfig,
    synth: &SyntheticCorpus,
    text: &TextCorpus,
    (liked, seeds, negatives): (usize, &[usize], &[usize]),
    gamma: Gamma,
    session_seed: u64,
) -> Result<PolicyTrace> {
    let mut rng = seed::rng(seed::derive(session_seed, &[1]));
    let mut rated: Vec<usize> = seeds.iter().chain(negatives).copied().collect();
    rated.sort_unstable();
    let inst = text.instances();
    let mut labeled: Vec<WeightedExample> = seeds
        .iter()
        .map(|&i| WeightedExample::unit(inst[i].x().clone(), Label::Positive))
        .collect();
    labeled.extend(negatives.iter().map(|&i| WeightedExample::unit(inst[i].x().clone(), Label::Negative)));
    let pool = (0..text.len()).filter(|i| !rated.contains(i)).map(|i| inst[i].clone()).collect();

    let model = HingeRanker;
    let mut params = model.fit(&labeled, &cfg.train)?;
    let mut data = Dataset::new(labeled, pool)?;
    let ctx = UpdateContext {
        model: &model,
        bridge: text.bridge(),
        kernel: ProximityKernel::default(),
        advice_weight: cfg.advice_weight,
        train: cfg.train,
    };
    let strategy = GetInstanceStrategy::CentroidTopActivation {
        pool_top: cfg.pool_top,
        k: 1,
    };
    let liked_topics = [liked];

    let mut steps = Vec::with_capacity(cfg.actions + 1);
    let mut acted: Vec<(String, Label)> = Vec::new();
    for step in 0..=cfg.actions {
        let scores: Vec<f64> = inst
            .iter()
            .map(|i| model.score(&params, i.x()))
            .collect::<Result<_>>()?;
        // Both policies share display seeds so that at step 0 they differ
        // only through the selection rule.
        let shown = display(cfg, text, &scores, &rated, gamma, seed::derive(session_seed, &[2, step as u64]))?;
        if step < cfg.actions {
            let terms: Vec<&str> = shown.iter().flat_map(|e| e.terms.iter().map(|t| t.term.as_str())).collect();
            let fresh = |t: &&str| !acted.iter().any(|(a, _)| a == t);
            let liked_term = |t: &&str| synth.term_is_liked(t, &liked_topics);
            // Prefer a new liked term; otherwise reject a new unrelated one;
            // otherwise repeat a liked term.
            let choice = terms
                .iter()
                .find(|t| fresh(t) && liked_term(t))
                .map(|t| (*t, Label::Positive))
                .or_else(|| terms.iter().find(|t| fresh(t) && !liked_term(t)).map(|t| (*t, Label::Negative)))
                .or_else(|| {
                    let liked: Vec<&&str> = terms.iter().filter(|t| liked_term(t)).collect();
                    liked.choose(&mut rng).map(|t| (**t, Label::Positive))
                });
            if let Some((term, polarity)) = choice {
                let feature = text.vocab().index_of(term).expect("displayed terms come from the vocabulary");
                let report = limeade_update(
                    &ctx,
                    &params,
                    &mut data,
                    &inst[rated[0]],
                    AdviceAction { feature, polarity },
                    &strategy,
                    seed::derive(session_seed, &[3, step as u64]),
                );
                match report {
                    Ok(r) => params = r.new_params,
                    Err(LimeadeError::FeatureUnsupported { .. }) => {}
                    Err(e) => return Err(e),
                }
                acted.push((term.to_string(), polarity));
            }
        }
        steps.push(shown);
    }
    Ok(PolicyTrace { steps, acted })
}

pub fn run_session(cfg: &TradeoffConfig, synth: &SyntheticCorpus, text: &TextCorpus, session: usize) -> Result<SessionTrace> {
    let session_seed = seed::derive(cfg.master_seed, &[3, 2, session as u64]);
    let mut rng = seed::rng(session_seed);
    let (liked, seeds, negatives) = session_start(synth, text.len(), cfg.seed_papers, &mut rng);
    let start = (liked, seeds.as_slice(), negatives.as_slice());
    Ok(SessionTrace {
        session,
        liked,
        greedy: run_policy(cfg, synth, text, start, Gamma::Infinite, session_seed)?,
        sampled: run_policy(cfg, synth, text, start, cfg.gamma, session_seed)?,
    })
}

pub fn build_corpus(cfg: &TradeoffConfig) -> Result<(SyntheticCorpus, TextCorpus)> {
    let synth = gen_corpus(&cfg.corpus, seed::derive(cfg.master_seed, &[3, 0]))?;
    let text = TextCorpus::build(
        synth.docs.clone(),
        cfg.vocab_size,
        cfg.embed_dim,
        seed::derive(cfg.master_seed, &[3, 1]),
    )?;
    Ok((synth, text))
}

pub fn run_tradeoff_study(cfg: &TradeoffConfig) -> Result<TradeoffResult> {
    cfg.validate()?;
    let (synth, text) = build_corpus(cfg)?;
    let traces: Vec<SessionTrace> = (0..cfg.n_sessions)
        .into_par_iter()
        .map(|s| run_session(cfg, &synth, &text, s))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let (mut gs, mut ss) = (Vec::new(), Vec::new());
    let mut greedy_curve = vec![0.0; cfg.actions + 1];
    let mut sampled_curve = vec![0.0; cfg.actions + 1];
    for tr in &traces {
        let g = tr.greedy.unique_counts();
        let s = tr.sampled.unique_counts();
        for (step, (a, b)) in g.iter().zip(&s).enumerate() {
            let group = format!("session_{:03}", tr.session);
            rows.push(ResultRow::new(STUDY, group.clone(), tr.session as u64, GREEDY, "unique_terms", *a).at_step(step));
            rows.push(ResultRow::new(STUDY, group, tr.session as u64, SAMPLED, "unique_terms", *b).at_step(step));
            greedy_curve[step] += a / cfg.n_sessions as f64;
            sampled_curve[step] += b / cfg.n_sessions as f64;
        }
        gs.push(ls_slope(&g));
        ss.push(ls_slope(&s));
    }
    let test: Option<TTest> = metrics::paired_t_test(&gs, &ss).ok();
    Ok(TradeoffResult {
        rows,
        summary: TradeoffSummary {
            config: cfg.clone(),
            greedy_slope: Stat::of(&gs),
            sampled_slope: Stat::of(&ss),
            t: test.map(|t| t.t),
            p: test.map(|t| t.p_two_sided),
            greedy_curve,
            sampled_curve,
        },
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        assert!((ls_slope(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-12);
        assert_eq!(ls_slope(&[4.0, 4.0, 4.0]), 0.0);
        assert_eq!(ls_slope(&[1.0]), 0.0);
    }
}
