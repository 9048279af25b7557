use thiserror::Error;

pub type Result<T> = std::result::Result<T, LimeadeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimeadeError {
    #[error("distance undefined between two zero vectors")]
    DegenerateDistance,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("training diverged at epoch {epoch} (non-finite loss); lower the learning rate")]
    Divergence { epoch: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unlabeled pool is empty")]
    EmptyPool,

    #[error("feature {feature} is not present in any pool instance")]
    FeatureUnsupported { feature: usize },

    #[error("no eligible feature to advise on")]
    NoAdviceAvailable,

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid value: {0}")]
    Value(String),
}
