use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] taosched_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Format(String),
    #[error("kernel check failed: {0}")]
    Kernel(String),
    #[error("allocation of {bytes} bytes for {what} failed")]
    Alloc { what: &'static str, bytes: usize },
    #[error("native run timed out after {completed} of {total} TAOs")]
    Timeout { completed: usize, total: usize },
    #[error("{row}: {source}")]
    Row { row: String, source: Box<BenchError> },
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

impl BenchError {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        BenchError::Format(msg.into())
    }
}
