use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the sharing pipeline and the verifier toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid genotype {value:?} at row {row}, column {col}")]
    Genotype { row: usize, col: usize, value: String },

    #[error("malformed dataset {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),

    #[error("index {index} out of range for {len} columns")]
    Index { index: usize, len: usize },

    #[error("statistical test undefined: {0}")]
    UndefinedTest(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable tag, used in structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Genotype { .. } => "genotype",
            Error::Format { .. } => "format",
            Error::Parameter(_) => "parameter",
            Error::InsufficientData(_) => "insufficient_data",
            Error::DegenerateCalibration(_) => "degenerate_calibration",
            Error::Index { .. } => "index",
            Error::UndefinedTest(_) => "undefined_test",
            Error::Distribution(_) => "distribution",
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
