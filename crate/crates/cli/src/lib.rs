//! End-to-end benchmark orchestration: dataset gating and sampling, trace
//! generation, contract generation, replay, retries and report export.

pub mod config;
pub mod dataset;
pub mod export;
pub mod runner;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{BackendConfig, RunConfig};
pub use dataset::{scan_dataset, DatasetEntry};
pub use export::{export_report, load_report};
pub use runner::{retry_failed, run_benchmark, RetrySummary};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("no generatable models found in {0}")]
    DatasetEmpty(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("backend: {0}")]
    Backend(String),
    #[error("simulation of {model}: {message}")]
    Simulation { model: String, message: String },
    #[error(transparent)]
    Llm(#[from] chorbench_core::llm::LlmError),
    #[error("{0}")]
    Format(String),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RunError {
    let path = path.into();
    move |source| RunError::Io { path, source }
}

/// Writes a file, creating parent directories.
pub(crate) fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}
