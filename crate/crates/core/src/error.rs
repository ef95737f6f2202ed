use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the generation engine and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid function library entry {entry}: {reason}")]
    Library { entry: String, reason: String },

    #[error("duplicate function name {0:?} in library")]
    DuplicateFunction(String),

    #[error("example {id} violates invariant: {reason}")]
    InvalidExample { id: String, reason: String },

    #[error("malformed dataset line {line}: {reason}")]
    DatasetLine { line: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error("generation failure: {0}")]
    Generation(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

/// Failures talking to an LLM or embedding backend, or decoding its output.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited by provider")]
    RateLimited,
    #[error("unscripted prompt for signature {0}")]
    Unscripted(String),
    #[error("{field} not provided")]
    MissingInput { field: String },
    #[error("output missing fields: {}", missing.join(", "))]
    MissingOutputFields { missing: Vec<String> },
    #[error("malformed output: {0}")]
    Malformed(String),
    #[error("empty input")]
    EmptyInput,
}

impl ProviderError {
    /// Transport-level failures that a caller may retry.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::Transport(_) | ProviderError::Timeout | ProviderError::RateLimited
        )
    }

    /// Output-shape failures that warrant a re-prompt.
    pub fn is_parse_failure(&self) -> bool {
        matches!(
            self,
            ProviderError::MissingOutputFields { .. } | ProviderError::Malformed(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
