use std::path::PathBuf;

use thiserror::Error;

use crate::backends::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown taxonomy `{0}`")]
    UnknownTaxonomy(String),

    #[error("invalid taxonomy `{name}`: {reason}")]
    InvalidTaxonomy { name: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    InvalidRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("document contains no extractable text")]
    EmptyDocument,

    #[error("invalid prompt template: {0}")]
    InvalidTemplate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("evaluation input mismatch: {0}")]
    EvaluationInput(String),

    #[error("nothing to score: every segment was ignored, discarded or excluded")]
    NothingScored,

    #[error("unknown report format `{0}`")]
    UnknownFormat(String),

    #[error("unknown reference results `{key}` (known: {known})")]
    UnknownReference { key: String, known: String },

    #[error("class-set mismatch: {0}")]
    ClassSetMismatch(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that originate at a model provider rather than in
    /// local inputs or configuration.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::Backend(e) if e.is_provider_failure())
    }
}
