//! Advice taking for opaque learners.
//!
//! A learner is treated only through `fit`/`score`. Its predictions are
//! explained with linear surrogates over an interpretable vocabulary, and
//! feature-level advice ("more of term *j*", "less of part *j*") is turned
//! into weighted pseudo-examples that are appended to the labeled set before
//! retraining.
//!
//! Module map:
//!
//! * [`domain`]: instances, weighted examples, the interpretable bridge and
//!   the proximity kernel.
//! * [`models`]: the opaque learner contract plus logistic and hinge learners.
//! * [`explain`]: local/global linear surrogates and display-term selection.
//! * [`advice`]: pseudo-example generation and the update loop.
//! * [`text`]: TF-IDF vocabulary, random-projection embedder, text bridge.
//! * [`metrics`]: DCG/NDCG/AP, paired t-test, Holm-Bonferroni.
//! * [`harness`]: seeded experiment runners on synthetic data.

pub mod advice;
pub mod domain;
pub mod error;
pub mod explain;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod seed;
pub mod text;

pub use advice::{
    centroid_pseudoexample, get_instances_generative, get_instances_pool, limeade_update,
    simulate_advice_for_instance, AdviceAction, AdviceCase, GetInstanceStrategy, Polarity,
    Provenance, PseudoExample, Similarity, UpdateContext, UpdateReport,
};
pub use domain::{
    cosine_similarity, interp_distance, kernel_weight, Dataset, DomainBridge, Instance, InterpVec,
    Label, OpaqueVec, ProximityKernel, WeightedExample,
};
pub use error::{LimeadeError, Result};
pub use explain::{
    contributions, fit_global_surrogate, fit_local_surrogate, select_display_terms, stem,
    Contribution, DisplayTerm, Explanation, Gamma, Scope, Surrogate,
};
pub use models::{HingeRanker, Logistic, ModelParams, OpaqueModel, TrainConfig};
pub use text::{Document, ProjectionEmbedder, TextBridge, TextCorpus, Vocabulary};
