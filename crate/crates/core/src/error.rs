use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LbmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure at iteration {iteration}: {message}")]
    NumericalFailure { iteration: usize, message: String },

    #[error("all {restarts} restart chains failed; first failure: {first}")]
    AllChainsFailed {
        restarts: usize,
        first: Box<LbmError>,
    },

    #[error("fit failed for grid cell (g={g}, m={m}): {source}")]
    CellFailed {
        g: usize,
        m: usize,
        #[source]
        source: Box<LbmError>,
    },

    #[error("group count {0} exceeds the exhaustive matching bound of {1}")]
    Unsupported(usize, usize),

    #[error("infeasible stratified sample: group {group} needs {needed} rows but only {available} are available")]
    InfeasibleSample {
        group: usize,
        needed: usize,
        available: usize,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<LbmError>,
    },

    #[error("parse error at line {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LbmError {
    pub fn context(self, context: impl Into<String>) -> Self {
        LbmError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LbmError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, LbmError>;
