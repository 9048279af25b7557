//! Seeded experiment runners on synthetic data.
//!
//! * [`image`]: two-shot classifier updates, labeled pair vs. part advice.
//! * [`feed`]: ranking quality of feeds trained with and without term advice.
//! * [`tradeoff`]: displayed-term diversity under greedy vs. sampled display.

pub mod corpus;
pub mod feed;
pub mod image;
pub mod report;
pub mod synthetic;
pub mod tradeoff;

pub use report::{write_csv, Arm, ResultRow};
