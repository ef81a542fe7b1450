use std::path::PathBuf;

use mdmsc_core::Error as CoreError;

/// Broad failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Io,
    Numerical,
}

impl Category {
    pub fn exit_code(self) -> u8 {
        match self {
            Category::Config => 2,
            Category::Io => 3,
            Category::Numerical => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Config => "configuration error",
            Category::Io => "I/O error",
            Category::Numerical => "numerical error",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    BadFile { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("serializing output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> Category {
        match self {
            CliError::Config(_) => Category::Config,
            CliError::Io { .. } | CliError::BadFile { .. } | CliError::Json(_) => Category::Io,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter { .. } | CoreError::LengthMismatch { .. } => Category::Config,
                CoreError::EigenNoConvergence { .. } => Category::Numerical,
                CoreError::Io { .. }
                | CoreError::Parse { .. }
                | CoreError::RaggedRow { .. }
                | CoreError::EmptyInput { .. }
                | CoreError::InvalidDataset(_) => Category::Io,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
