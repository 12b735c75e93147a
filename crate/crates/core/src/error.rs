use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {index} has (near) zero l2-norm")]
    ZeroColumn { index: usize },

    #[error("unknown class id {0}")]
    UnknownClass(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("Gram system is numerically singular")]
    SingularGram,

    #[error("solver diverged at iteration {iteration}: non-finite iterate")]
    NumericalDivergence { iteration: usize },

    #[error("invalid target dimension {requested} (allowed 1..={max})")]
    InvalidDimension { requested: usize, max: usize },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("missing value at row {row}, column {col}")]
    MissingValue { row: usize, col: usize },

    #[error("dataset has no samples")]
    EmptyDataset,

    #[error("truncated file: {0}")]
    TruncatedFile(String),

    #[error("class {class} has too few samples ({available}) for the requested split ({requested} train)")]
    InsufficientSamples {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("invalid fold count {k} for {n} samples")]
    InvalidFoldCount { k: usize, n: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
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

    /// Coarse category used for process exit codes and the C ABI.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::SingularGram | Error::NumericalDivergence { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}
