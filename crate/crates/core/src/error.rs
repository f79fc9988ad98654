use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("atom number must be even and at least 2, got {0}")]
    InvalidAtomNumber(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("episode finished; call reset before stepping again")]
    EpisodeFinished,

    #[error("episode not started; call reset first")]
    EpisodeNotStarted,

    #[error("transition buffer is empty")]
    EmptyBuffer,

    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field: field.to_string(), reason: reason.into() }
    }
}
