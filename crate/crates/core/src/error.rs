use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid group specification: {0}")]
    InvalidSpec(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("envelope mismatch: sums are only defined for a shared exponential envelope")]
    EnvelopeMismatch,

    #[error("function is not integrable against the heat kernel: {0}")]
    NotIntegrable(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
