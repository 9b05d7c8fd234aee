use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad or unreadable configuration; maps to exit code 1.
    #[error("config error: {key}: {message}")]
    Config { key: String, message: String },

    /// Failure while running or writing results; maps to exit code 2.
    #[error("{0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] uda_core::Error),
}

impl BenchError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        BenchError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Config { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
