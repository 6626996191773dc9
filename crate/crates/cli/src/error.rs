use std::path::Path;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] gknn::GknnError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for input errors, 2 for verification failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 2,
            _ => 1,
        }
    }
}
