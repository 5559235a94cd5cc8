use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dim { expected: usize, actual: usize },

    #[error("zero-norm vector{}", .id.as_deref().map(|id| format!(" for item '{id}'")).unwrap_or_default())]
    ZeroNorm { id: Option<String> },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular covariance matrix: {0}")]
    Singular(String),

    #[error("zero variance in paired differences with non-zero mean difference {mean_diff}")]
    ZeroVariance { mean_diff: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    #[error("value out of range at row {row}, column '{column}': {value} not in [{min}, {max}]")]
    Range {
        row: usize,
        column: String,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("remote embedder returned HTTP {status}: {body}")]
    Remote { status: u16, body: String },

    #[error("remote embedder timed out or was unreachable after {timeout_ms} ms: {detail}")]
    Timeout { timeout_ms: u64, detail: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Attaches an item id to a zero-norm error that does not carry one yet.
    pub(crate) fn with_item(self, id: &str) -> Self {
        match self {
            Error::ZeroNorm { id: None } => Error::ZeroNorm {
                id: Some(id.to_string()),
            },
            other => other,
        }
    }
}
