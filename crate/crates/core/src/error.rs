use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("ordering error at row {row}: timestamp {timestamp} does not exceed {previous}")]
    Ordering {
        row: usize,
        timestamp: i64,
        previous: i64,
    },

    #[error("parse error at row {row}, column {column}: {detail}")]
    Parse {
        row: usize,
        column: String,
        detail: String,
    },

    #[error("size error: {0}")]
    Size(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("gradient check failed: {0}")]
    GradCheck(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: impl Into<String>, right: impl Into<String>) -> Self {
        Error::Shape {
            op,
            left: left.into(),
            right: right.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier, used by the command-line front end for
    /// machine-parsable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Domain { .. } => "domain",
            Error::Schema(_) => "schema",
            Error::Ordering { .. } => "ordering",
            Error::Parse { .. } => "parse",
            Error::Size(_) => "size",
            Error::Config(_) => "config",
            Error::Training(_) => "training",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::GradCheck(_) => "grad_check",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
