use limeade_core::LimeadeError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Validation(_) => "validation",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Internal(_) => "internal",
        }
    }
}

impl From<LimeadeError> for ServiceError {
    fn from(e: LimeadeError) -> Self {
        match e {
            LimeadeError::FeatureUnsupported { .. } => {
                ServiceError::Conflict("term not present in corpus pool".into())
            }
            LimeadeError::Value(m) | LimeadeError::InvalidInstance(m) => ServiceError::Validation(m),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for ServiceError {
    fn from(e: serde_json::Error) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;
