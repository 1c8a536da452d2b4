use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("data row {row}, column {column}: value {value:?} is not binary (0/1)")]
    NonBinary {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dataset is empty")]
    Empty,

    #[error("dataset contains a single class (label {0})")]
    SingleClass(u8),

    #[error("class {class} has {count} samples, need at least {needed} for stratification")]
    ClassTooSmall {
        class: u8,
        count: usize,
        needed: usize,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("model `{model}`: {message}")]
    Model { model: String, message: String },

    #[error("adapter `{model}` protocol violation: {message}")]
    Protocol { model: String, message: String },

    #[error("adapter `{model}` timed out after {seconds:.1}s waiting for `{cmd}`")]
    Timeout {
        model: String,
        cmd: String,
        seconds: f64,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<BenchError>,
    },
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        BenchError::InvalidArgument(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        BenchError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
