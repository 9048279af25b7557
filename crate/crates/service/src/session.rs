//! One feed: its labeled set, model, advice history and cached surrogate.

use std::collections::HashSet;
use std::time::{SystemTime, UNIX_EPOCH};

use limeade_core::{
    contributions, fit_global_surrogate, limeade_update, seed, select_display_terms, stem, AdviceAction,
    Dataset, GetInstanceStrategy, HingeRanker, InterpVec, Label, ModelParams, OpaqueModel, ProximityKernel,
    PseudoExample, Surrogate, TextCorpus, UpdateContext, UpdateReport, WeightedExample,
};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::error::{ServiceError, ServiceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Paper,
    Term,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub timestamp_ms: u64,
    pub kind: ActionKind,
    pub target: String,
    pub polarity: Label,
    /// Version after this action.
    pub version: u64,
}

/// Labeled-set entries, in training order.
#[derive(Debug, Clone, PartialEq)]
enum Entry {
    /// A rated corpus document. `implicit` marks drawn negatives.
    Paper { doc: usize, label: Label, implicit: bool },
    Pseudo(PseudoExample),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationTerm {
    pub term: String,
    pub feature: usize,
    pub contribution: f64,
    /// Direction the term pushes the score.
    pub polarity: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperExplanation {
    pub doc_id: String,
    pub terms: Vec<ExplanationTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedPaper {
    pub doc_id: String,
    pub title: String,
    pub score: f64,
    pub rank: usize,
    pub explanation: PaperExplanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationPage {
    pub feed_id: String,
    pub version: u64,
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
    pub papers: Vec<RecommendedPaper>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermUpdate {
    pub version: u64,
    pub retained_count: usize,
    pub discarded_count: usize,
}

/// What goes to disk. Everything else is rebuilt by replaying `history`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub feed_id: String,
    pub seed_doc_ids: Vec<String>,
    pub version: u64,
    pub history: Vec<HistoryEntry>,
    pub params: ModelParams,
}

#[derive(Debug, Clone)]
pub struct FeedSession {
    feed_id: String,
    seed_doc_ids: Vec<String>,
    display_seed: u64,
    entries: Vec<Entry>,
    params: ModelParams,
    version: u64,
    history: Vec<HistoryEntry>,
    surrogate: Surrogate,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn doc_index(corpus: &TextCorpus, id: &str) -> ServiceResult<usize> {
    corpus
        .position(id)
        .ok_or_else(|| ServiceError::NotFound(format!("unknown document {id}")))
}

/// A term is malformed if it could never be a vocabulary entry.
fn check_term_shape(term: &str) -> ServiceResult<()> {
    let ok = !term.is_empty()
        && term.len() <= 200
        && term == term.trim()
        && term.split(' ').count() <= 2
        && term.split(' ').all(|w| !w.is_empty() && w.chars().all(char::is_alphanumeric));
    if ok {
        Ok(())
    } else {
        Err(ServiceError::Validation(format!("malformed term {term:?}")))
    }
}

impl FeedSession {
    /// Seeds are deduplicated and sorted, so the seed set alone determines
    /// the feed. They are labeled positive; as many negatives are drawn from
    /// the rest of the corpus with a seed derived from the seed ids.
    pub fn create(corpus: &TextCorpus, cfg: &ServiceConfig, feed_id: String, seed_doc_ids: &[String]) -> ServiceResult<Self> {
        if seed_doc_ids.is_empty() {
            return Err(ServiceError::Validation("at least one seed document is required".into()));
        }
        let mut seeds: Vec<String> = Vec::new();
        for id in seed_doc_ids {
            doc_index(corpus, id)?;
            if !seeds.contains(id) {
                seeds.push(id.clone());
            }
        }
        seeds.sort();
        let key = seed::derive(cfg.master_seed, &[seed::hash_str(&seeds.join("\n"))]);
        let seed_pos: Vec<usize> = seeds.iter().map(|id| doc_index(corpus, id)).collect::<ServiceResult<_>>()?;
        let mut others: Vec<usize> = (0..corpus.len()).filter(|i| !seed_pos.contains(i)).collect();
        others.shuffle(&mut seed::rng(seed::derive(key, &[0])));
        if others.is_empty() {
            return Err(ServiceError::Validation("corpus has no documents besides the seeds".into()));
        }
        let mut negatives: Vec<usize> = others.into_iter().take(seed_pos.len()).collect();
        negatives.sort_unstable();

        let mut entries: Vec<Entry> = seed_pos
            .iter()
            .map(|&doc| Entry::Paper { doc, label: Label::Positive, implicit: false })
            .collect();
        entries.extend(negatives.iter().map(|&doc| Entry::Paper { doc, label: Label::Negative, implicit: true }));
        let params = HingeRanker.fit(&training_set(corpus, &entries)?, &cfg.train)?;
        let surrogate = refit_surrogate(corpus, cfg, &params)?;
        Ok(Self {
            feed_id,
            seed_doc_ids: seeds,
            display_seed: seed::derive(key, &[1]),
            entries,
            params,
            version: 1,
            history: Vec::new(),
            surrogate,
        })
    }

    pub fn feed_id(&self) -> &str {
        &self.feed_id
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn surrogate(&self) -> &Surrogate {
        &self.surrogate
    }

    /// Documents the reader rated (seeds included, drawn negatives not).
    pub fn rated(&self) -> HashSet<usize> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                Entry::Paper { doc, implicit: false, .. } => Some(*doc),
                _ => None,
            })
            .collect()
    }

    pub fn labeled_len(&self) -> usize {
        self.entries.len()
    }

    pub fn score(&self, corpus: &TextCorpus, doc: usize) -> ServiceResult<f64> {
        Ok(HingeRanker.score(&self.params, corpus.instances()[doc].x())?)
    }

    /// Rates a paper; a previous rating of the same paper is replaced.
    pub fn rate_paper(&mut self, corpus: &TextCorpus, cfg: &ServiceConfig, doc_id: &str, polarity: Label) -> ServiceResult<u64> {
        self.apply_paper(corpus, cfg, doc_id, polarity)?;
        self.commit(corpus, cfg, ActionKind::Paper, doc_id, polarity)
    }

    fn apply_paper(&mut self, corpus: &TextCorpus, cfg: &ServiceConfig, doc_id: &str, polarity: Label) -> ServiceResult<()> {
        let doc = doc_index(corpus, doc_id)?;
        let mut entries = self.entries.clone();
        entries.retain(|e| !matches!(e, Entry::Paper { doc: d, .. } if *d == doc));
        entries.push(Entry::Paper { doc, label: polarity, implicit: false });
        self.params = HingeRanker.fit(&training_set(corpus, &entries)?, &cfg.train)?;
        self.entries = entries;
        Ok(())
    }

    /// Applies term advice as a centroid pseudo-example over unrated papers.
    pub fn rate_term(&mut self, corpus: &TextCorpus, cfg: &ServiceConfig, term: &str, polarity: Label) -> ServiceResult<TermUpdate> {
        let report = self.apply_term(corpus, cfg, term, polarity)?;
        let version = self.commit(corpus, cfg, ActionKind::Term, term, polarity)?;
        Ok(TermUpdate {
            version,
            retained_count: report.retained_count,
            discarded_count: report.discarded_count,
        })
    }

    fn apply_term(&mut self, corpus: &TextCorpus, cfg: &ServiceConfig, term: &str, polarity: Label) -> ServiceResult<UpdateReport> {
        check_term_shape(term)?;
        let feature = corpus
            .vocab()
            .index_of(term)
            .ok_or_else(|| ServiceError::Validation(format!("unknown term {term:?}")))?;
        let rated = self.rated();
        let pool = (0..corpus.len())
            .filter(|i| !rated.contains(i))
            .map(|i| corpus.instances()[i].clone())
            .collect();
        let mut data = Dataset::new(training_set(corpus, &self.entries)?, pool)?;
        let ctx = UpdateContext {
            model: &HingeRanker,
            bridge: corpus.bridge(),
            kernel: ProximityKernel::default(),
            advice_weight: cfg.advice_weight,
            train: cfg.train,
        };
        let anchor_doc = doc_index(corpus, &self.seed_doc_ids[0])?;
        let report = limeade_update(
            &ctx,
            &self.params,
            &mut data,
            &corpus.instances()[anchor_doc],
            AdviceAction { feature, polarity },
            &GetInstanceStrategy::CentroidTopActivation { pool_top: cfg.pool_top, k: 1 },
            seed::derive(self.display_seed, &[self.version]),
        )?;
        self.entries.extend(report.added_examples.iter().cloned().map(Entry::Pseudo));
        self.params = report.new_params.clone();
        Ok(report)
    }

    fn commit(&mut self, corpus: &TextCorpus, cfg: &ServiceConfig, kind: ActionKind, target: &str, polarity: Label) -> ServiceResult<u64> {
        self.version += 1;
        self.history.push(HistoryEntry {
            timestamp_ms: now_ms(),
            kind,
            target: target.to_string(),
            polarity,
            version: self.version,
        });
        self.surrogate = refit_surrogate(corpus, cfg, &self.params)?;
        Ok(self.version)
    }

    /// Ranks unrated papers and explains the requested page. `page` counts
    /// from 1; a page past the end is empty.
    pub fn page(&self, corpus: &TextCorpus, cfg: &ServiceConfig, page: usize, page_size: usize) -> ServiceResult<RecommendationPage> {
        if page == 0 {
            return Err(ServiceError::Validation("page counts from 1".into()));
        }
        if page_size == 0 || page_size > cfg.max_page_size {
            return Err(ServiceError::Validation(format!("page_size must be in 1..={}", cfg.max_page_size)));
        }
        let rated = self.rated();
        let mut scored: Vec<(f64, usize)> = (0..corpus.len())
            .filter(|i| !rated.contains(i))
            .map(|i| self.score(corpus, i).map(|s| (s, i)))
            .collect::<ServiceResult<_>>()?;
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| corpus.docs()[a.1].id.cmp(&corpus.docs()[b.1].id))
        });
        let total = scored.len();
        let start = (page - 1).saturating_mul(page_size);
        let term_of = |j: usize| corpus.vocab().term(j).to_string();
        let papers = scored
            .iter()
            .enumerate()
            .skip(start)
            .take(page_size)
            .map(|(rank0, &(score, i))| {
                let doc = &corpus.docs()[i];
                let c = contributions(&self.surrogate, corpus.instances()[i].interp())?;
                let seed_ = seed::derive(self.display_seed, &[seed::hash_str(&doc.id)]);
                let e = select_display_terms(&doc.id, &c, cfg.n_display, cfg.gamma, seed_, term_of, stem)?;
                Ok(RecommendedPaper {
                    doc_id: doc.id.clone(),
                    title: doc.title.clone(),
                    score,
                    rank: rank0 + 1,
                    explanation: PaperExplanation {
                        doc_id: e.instance_id,
                        terms: e
                            .terms
                            .into_iter()
                            .map(|t| ExplanationTerm {
                                polarity: if t.contribution < 0.0 { Label::Negative } else { Label::Positive },
                                term: t.term,
                                feature: t.feature,
                                contribution: t.contribution,
                            })
                            .collect(),
                    },
                })
            })
            .collect::<ServiceResult<_>>()?;
        Ok(RecommendationPage {
            feed_id: self.feed_id.clone(),
            version: self.version,
            page,
            page_size,
            total,
            papers,
        })
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            feed_id: self.feed_id.clone(),
            seed_doc_ids: self.seed_doc_ids.clone(),
            version: self.version,
            history: self.history.clone(),
            params: self.params.clone(),
        }
    }

    /// Rebuilds a session by replaying its history and checks that the
    /// replayed parameters equal the stored ones bit for bit.
    pub fn replay(corpus: &TextCorpus, cfg: &ServiceConfig, snap: &Snapshot) -> ServiceResult<Self> {
        let mut s = Self::create(corpus, cfg, snap.feed_id.clone(), &snap.seed_doc_ids)?;
        for h in &snap.history {
            match h.kind {
                ActionKind::Paper => s.apply_paper(corpus, cfg, &h.target, h.polarity)?,
                ActionKind::Term => {
                    s.apply_term(corpus, cfg, &h.target, h.polarity)?;
                }
            }
            s.version += 1;
            s.history.push(h.clone());
        }
        if s.version != snap.version || !bit_equal(&s.params, &snap.params) {
            return Err(ServiceError::Internal(format!(
                "snapshot of feed {} does not replay to its stored state",
                snap.feed_id
            )));
        }
        s.surrogate = refit_surrogate(corpus, cfg, &s.params)?;
        Ok(s)
    }
}

pub fn bit_equal(a: &ModelParams, b: &ModelParams) -> bool {
    a.bias.to_bits() == b.bias.to_bits()
        && a.weights.len() == b.weights.len()
        && a.weights.iter().zip(&b.weights).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn training_set(corpus: &TextCorpus, entries: &[Entry]) -> ServiceResult<Vec<WeightedExample>> {
    entries
        .iter()
        .map(|e| match e {
            Entry::Paper { doc, label, .. } => Ok(WeightedExample::unit(corpus.instances()[*doc].x().clone(), *label)),
            Entry::Pseudo(p) => Ok(p.to_weighted()?),
        })
        .collect()
}

fn refit_surrogate(corpus: &TextCorpus, cfg: &ServiceConfig, params: &ModelParams) -> ServiceResult<Surrogate> {
    let scores: Vec<f64> = corpus
        .instances()
        .iter()
        .map(|i| HingeRanker.score(params, i.x()))
        .collect::<limeade_core::Result<_>>()?;
    let rows: Vec<InterpVec> = corpus.instances().iter().map(|i| i.interp().clone()).collect();
    Ok(fit_global_surrogate(&scores, &rows, cfg.ridge_lambda)?)
}
