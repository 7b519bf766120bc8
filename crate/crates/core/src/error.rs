use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("schema error: column `{column}` not found")]
    MissingColumn { column: String },

    #[error("schema error: {0}")]
    Schema(String),

    /// `row` is the 1-based data row (header excluded).
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("no visits to small set [{lower}, {upper}]")]
    NoVisits { lower: f64, upper: f64 },

    #[error("no complete regeneration block: small set visited only once")]
    NoCompleteBlocks,

    #[error("singular normal matrix (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("truncation removed all observations")]
    EmptyMask,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("deterministic series: residual variance is zero")]
    Deterministic,

    #[error("bandwidth selection failed: every grid point is degenerate")]
    DegenerateGrid,

    #[error("experiment failed: {failures} of {reps} replications failed")]
    TooManyFailures { failures: usize, reps: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
