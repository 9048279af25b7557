//! Feed ranking simulation.
//!
//! Each simulated feed has a reader who likes some topics, a pool of papers
//! the reader has rated, and a few term annotations ("more of this word").
//! The baseline arm trains the hinge ranker on a handful of rated papers
//! plus random corpus negatives; the LIMEADE arm also applies the term
//! annotations as centroid advice. Both rank the papers outside the
//! training set and are scored by NDCG against the reader's relevance.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{gen_corpus, CorpusSpec, SyntheticCorpus};
use super::report::{holm_adjust, Arm, Comparison, ResultRow};
use crate::advice::{limeade_update, AdviceAction, GetInstanceStrategy, UpdateContext};
use crate::domain::{Dataset, Label, ProximityKernel, WeightedExample};
use crate::error::{LimeadeError, Result};
use crate::metrics;
use crate::models::{HingeRanker, ModelParams, OpaqueModel, TrainConfig};
use crate::seed;
use crate::text::TextCorpus;

pub const STUDY: &str = "feedsim";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedSimConfig {
    pub n_feeds: usize,
    pub sizes: Vec<usize>,
    /// Training sets sampled per (feed, size).
    pub draws: usize,
    pub rated_relevant: usize,
    pub rated_irrelevant: usize,
    pub random_negatives: usize,
    pub annotations: usize,
    pub negative_annotation_rate: f64,
    pub advice_weight: f64,
    pub pool_top: usize,
    pub corpus: CorpusSpec,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub master_seed: u64,
    /// Every paper equally relevant to every reader.
    pub uniform_oracle: bool,
    pub dump_rankings: bool,
    pub train: TrainConfig,
}

impl Default for FeedSimConfig {
    fn default() -> Self {
        Self {
            n_feeds: 30,
            sizes: vec![2, 5, 10],
            draws: 10,
            rated_relevant: 20,
            rated_irrelevant: 10,
            random_negatives: 10,
            annotations: 4,
            negative_annotation_rate: 0.4,
            advice_weight: 1.0,
            pool_top: 100,
            corpus: CorpusSpec::default(),
            vocab_size: 500,
            embed_dim: 64,
            master_seed: 7,
            uniform_oracle: false,
            dump_rankings: false,
            train: TrainConfig::default(),
        }
    }
}

impl FeedSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_feeds < 2 || self.sizes.is_empty() || self.draws == 0 {
            return Err(LimeadeError::Value("need >= 2 feeds, some sizes and draws".into()));
        }
        if self.sizes.iter().any(|&n| n == 0 || n > self.rated_relevant + self.rated_irrelevant) {
            return Err(LimeadeError::Value("training sizes must fit in the rated pool".into()));
        }
        Ok(())
    }
}

/// A simulated reader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feed {
    pub liked: Vec<usize>,
    /// Corpus positions of rated papers.
    pub rated: Vec<usize>,
    pub annotations: Vec<(String, Label)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDump {
    pub feed: usize,
    pub size: usize,
    pub draw: usize,
    pub arm: Arm,
    pub doc_ids: Vec<String>,
    /// Oracle relevance in ranked order.
    pub relevances: Vec<f64>,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub size: usize,
    pub ndcg: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedSummary {
    pub config: FeedSimConfig,
    pub sizes: Vec<SizeSummary>,
    pub aggregate: Comparison,
}

#[derive(Debug, Clone)]
pub struct FeedSimResult {
    pub rows: Vec<ResultRow>,
    pub summary: FeedSummary,
    pub rankings: Vec<RankingDump>,
}

/// Builds the corpus shared by all feeds.
pub fn build_corpus(cfg: &FeedSimConfig) -> Result<(SyntheticCorpus, TextCorpus)> {
    let synth = gen_corpus(&cfg.corpus, seed::derive(cfg.master_seed, &[2, 0]))?;
    let text = TextCorpus::build(
        synth.docs.clone(),
        cfg.vocab_size,
        cfg.embed_dim,
        seed::derive(cfg.master_seed, &[2, 1]),
    )?;
    Ok((synth, text))
}

fn relevance(cfg: &FeedSimConfig, synth: &SyntheticCorpus, i: usize, liked: &[usize]) -> f64 {
    if cfg.uniform_oracle {
        1.0
    } else {
        synth.relevance(i, liked)
    }
}

pub fn make_feed(cfg: &FeedSimConfig, synth: &SyntheticCorpus, text: &TextCorpus, f: usize) -> Result<Feed> {
    let mut rng = seed::rng(seed::derive(cfg.master_seed, &[2, 2, f as u64]));
    let n_topics = synth.topic_words.len();
    let n_liked = rng.random_range(1..=2);
    let mut topics: Vec<usize> = (0..n_topics).collect();
    topics.shuffle(&mut rng);
    let liked: Vec<usize> = topics[..n_liked].to_vec();

    let (mut rel, mut irr): (Vec<usize>, Vec<usize>) =
        (0..synth.docs.len()).partition(|&i| relevance(cfg, synth, i, &liked) > 0.0);
    rel.shuffle(&mut rng);
    irr.shuffle(&mut rng);
    let mut rated: Vec<usize> = rel.iter().take(cfg.rated_relevant).copied().collect();
    rated.extend(irr.iter().take(cfg.rated_irrelevant));
    rated.sort_unstable();

    // Annotate frequent words of liked topics that made it into the vocabulary.
    let mut candidates: Vec<&String> = liked
        .iter()
        .flat_map(|&t| synth.topic_words[t].iter().take(5))
        .filter(|w| text.vocab().index_of(w).is_some())
        .collect();
    candidates.shuffle(&mut rng);
    let mut annotations: Vec<(String, Label)> = candidates
        .into_iter()
        .take(cfg.annotations)
        .map(|w| (w.clone(), Label::Positive))
        .collect();
    if rng.random_bool(cfg.negative_annotation_rate) {
        let disliked = topics[n_liked..].choose(&mut rng).copied();
        if let Some(t) = disliked {
            if let Some(w) = synth.topic_words[t].iter().take(5).find(|w| text.vocab().index_of(w).is_some()) {
                annotations.push((w.clone(), Label::Negative));
            }
        }
    }
    Ok(Feed {
        liked,
        rated,
        annotations,
    })
}

/// Document positions ranked by descending score, ties by ascending id.
pub fn rank(model: &dyn OpaqueModel, params: &ModelParams, text: &TextCorpus, docs: &[usize]) -> Result<Vec<usize>> {
    let mut scored: Vec<(f64, usize)> = docs
        .iter()
        .map(|&i| model.score(params, text.instances()[i].x()).map(|s| (s, i)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| text.instances()[a.1].id().cmp(text.instances()[b.1].id()))
    });
    Ok(scored.into_iter().map(|(_, i)| i).collect())
}

struct DrawOutcome {
    ndcg: [f64; 2],
    dumps: Vec<RankingDump>,
}

fn run_draw(
    cfg: &FeedSimConfig,
    synth: &SyntheticCorpus,
    text: &TextCorpus,
    feed: &Feed,
    (f, size, draw): (usize, usize, usize),
) -> Result<DrawOutcome> {
    let mut rng = seed::rng(seed::derive(cfg.master_seed, &[2, 3, f as u64, size as u64, draw as u64]));
    let rel = |i: usize| relevance(cfg, synth, i, &feed.liked);
    let mut sample: Vec<usize>;
    let mut tries = 0;
    loop {
        sample = feed.rated.choose_multiple(&mut rng, size).copied().collect();
        tries += 1;
        if sample.iter().any(|&i| rel(i) > 0.0) || tries >= 100 {
            break;
        }
    }
    sample.sort_unstable();
    let sample_set: HashSet<usize> = sample.iter().copied().collect();
    let outside: Vec<usize> = (0..text.len()).filter(|i| !sample_set.contains(i)).collect();
    let mut negatives: Vec<usize> = outside.choose_multiple(&mut rng, cfg.random_negatives).copied().collect();
    negatives.sort_unstable();

    let inst = text.instances();
    let mut examples: Vec<WeightedExample> = sample
        .iter()
        .map(|&i| {
            let y = if rel(i) > 0.0 { Label::Positive } else { Label::Negative };
            WeightedExample::unit(inst[i].x().clone(), y)
        })
        .collect();
    examples.extend(negatives.iter().map(|&i| WeightedExample::unit(inst[i].x().clone(), Label::Negative)));

    let training: HashSet<usize> = sample.iter().chain(&negatives).copied().collect();
    let eval: Vec<usize> = (0..text.len()).filter(|i| !training.contains(i)).collect();

    let model = HingeRanker;
    let params_b = model.fit(&examples, &cfg.train)?;

    let mut data = Dataset::new(examples, eval.iter().map(|&i| inst[i].clone()).collect())?;
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
    let mut params_l = params_b.clone();
    for (step, (term, polarity)) in feed.annotations.iter().enumerate() {
        let Some(feature) = text.vocab().index_of(term) else { continue };
        // The anchor only matters for kernel-weighted strategies.
        let anchor = &inst[eval[0]];
        match limeade_update(
            &ctx,
            &params_l,
            &mut data,
            anchor,
            AdviceAction {
                feature,
                polarity: *polarity,
            },
            &strategy,
            seed::derive(cfg.master_seed, &[2, 4, step as u64]),
        ) {
            Ok(r) => params_l = r.new_params,
            Err(LimeadeError::FeatureUnsupported { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let mut ndcg = [0.0; 2];
    let mut dumps = Vec::new();
    for (k, (arm, params)) in [(Arm::Baseline, &params_b), (Arm::Limeade, &params_l)].into_iter().enumerate() {
        let order = rank(&model, params, text, &eval)?;
        let rels: Vec<f64> = order.iter().map(|&i| rel(i)).collect();
        ndcg[k] = metrics::ndcg(&rels);
        if cfg.dump_rankings {
            dumps.push(RankingDump {
                feed: f,
                size,
                draw,
                arm,
                doc_ids: order.iter().map(|&i| inst[i].id().to_string()).collect(),
                relevances: rels,
                ndcg: ndcg[k],
            });
        }
    }
    Ok(DrawOutcome { ndcg, dumps })
}

pub fn run_feed_simulation(cfg: &FeedSimConfig) -> Result<FeedSimResult> {
    cfg.validate()?;
    let (synth, text) = build_corpus(cfg)?;
    let feeds: Vec<Feed> = (0..cfg.n_feeds)
        .map(|f| make_feed(cfg, &synth, &text, f))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize, usize)> = (0..cfg.n_feeds)
        .flat_map(|f| cfg.sizes.iter().flat_map(move |&n| (0..cfg.draws).map(move |d| (f, n, d))))
        .collect();
    let outcomes: Vec<DrawOutcome> = jobs
        .par_iter()
        .map(|&job| run_draw(cfg, &synth, &text, &feeds[job.0], job))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(2 * jobs.len());
    let mut rankings = Vec::new();
    // Per-(feed, size) means, indexed [size][feed][arm].
    let mut means = vec![vec![[0.0f64; 2]; cfg.n_feeds]; cfg.sizes.len()];
    for (&(f, n, d), o) in jobs.iter().zip(outcomes) {
        let si = cfg.sizes.iter().position(|&s| s == n).expect("size from config");
        for (k, arm) in [Arm::Baseline, Arm::Limeade].into_iter().enumerate() {
            rows.push(ResultRow::new(STUDY, format!("feed_{f:02}"), d as u64, arm.as_str(), "ndcg", o.ndcg[k]).at_step(n));
            means[si][f][k] += o.ndcg[k] / cfg.draws as f64;
        }
        rankings.extend(o.dumps);
    }

    let mut sizes = Vec::with_capacity(cfg.sizes.len());
    let (mut all_b, mut all_l) = (Vec::new(), Vec::new());
    for (si, &n) in cfg.sizes.iter().enumerate() {
        let b: Vec<f64> = means[si].iter().map(|m| m[0]).collect();
        let l: Vec<f64> = means[si].iter().map(|m| m[1]).collect();
        sizes.push(SizeSummary {
            size: n,
            ndcg: Comparison::paired(&b, &l),
        });
        all_b.extend(b);
        all_l.extend(l);
    }
    holm_adjust(sizes.iter_mut().map(|s| &mut s.ndcg))?;
    let aggregate = Comparison::paired(&all_b, &all_l);
    Ok(FeedSimResult {
        rows,
        summary: FeedSummary {
            config: cfg.clone(),
            sizes,
            aggregate,
        },
        rankings,
    })
}

pub fn render_table(s: &FeedSummary) -> String {
    let fmt_p = |p: Option<f64>| p.map_or("-".to_string(), |p| format!("{p:.4}"));
    let mut out = format!("{:<6} {:>10} {:>10} {:>9} {:>9}\n", "size", "baseline", "limeade", "p", "adj p");
    for z in &s.sizes {
        out += &format!(
            "{:<6} {:>10.4} {:>10.4} {:>9} {:>9}\n",
            z.size,
            z.ndcg.baseline.mean,
            z.ndcg.limeade.mean,
            fmt_p(z.ndcg.p),
            fmt_p(z.ndcg.adjusted_p)
        );
    }
    out += &format!(
        "{:<6} {:>10.4} {:>10.4} {:>9}\n",
        "all",
        s.aggregate.baseline.mean,
        s.aggregate.limeade.mean,
        fmt_p(s.aggregate.p)
    );
    out
}
