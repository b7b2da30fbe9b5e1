use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FblError {
    #[error("config: {0}")]
    Config(String),

    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("numeric failure: {0}")]
    Numeric(#[from] fbl_core::Error),
}

impl FblError {
    pub fn config(msg: impl Into<String>) -> Self {
        FblError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FblError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input or unwritable output, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            FblError::Numeric(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = FblError> = std::result::Result<T, E>;
