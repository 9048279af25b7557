//! Interactive feed curation over a fixed paper corpus.
//!
//! A feed is seeded with a few papers, ranked by a hinge ranker over
//! document embeddings, and explained with four terms per paper taken from
//! a global linear surrogate. Readers rate papers or terms; term ratings
//! become centroid pseudo-examples. Every mutation retrains synchronously
//! and is persisted as a JSON snapshot that replays to identical parameters.

pub mod api;
pub mod config;
pub mod error;
pub mod session;
pub mod store;

pub use api::router;
pub use config::ServiceConfig;
pub use error::ServiceError;
pub use session::{FeedSession, HistoryEntry, RecommendationPage};
pub use store::FeedStore;
