use std::path::PathBuf;

use limeade_core::{Gamma, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// Snapshot directory; `None` keeps feeds in memory only.
    pub data_dir: Option<PathBuf>,
    pub advice_weight: f64,
    pub gamma: Gamma,
    pub master_seed: u64,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub n_display: usize,
    pub pool_top: usize,
    pub ridge_lambda: f64,
    pub default_page_size: usize,
    pub max_page_size: usize,
    pub train: TrainConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            advice_weight: 1.0,
            gamma: Gamma::Finite(4.0),
            master_seed: 7,
            vocab_size: limeade_core::TextCorpus::DEFAULT_VOCAB,
            embed_dim: limeade_core::ProjectionEmbedder::DEFAULT_DIM,
            n_display: 4,
            pool_top: 100,
            ridge_lambda: 0.01,
            default_page_size: 10,
            max_page_size: 100,
            train: TrainConfig::default(),
        }
    }
}
