use std::path::PathBuf;

/// Errors produced by the clustering pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: no data rows")]
    EmptyInput { path: PathBuf },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("label length mismatch: predicted={predicted}, truth={truth}")]
    LengthMismatch { predicted: usize, truth: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e}, size {size})")]
    EigenNoConvergence {
        sweeps: usize,
        off_norm: f64,
        size: usize,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
