use thiserror::Error;
use wavefocus_boundary::BoundaryError;
use wavefocus_core::CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration; `pointer` is a JSON pointer into
    /// the config document.
    #[error("configuration error at {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
