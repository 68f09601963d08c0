//! Orchestration behind the `globinj` binary: configuration, the analysis
//! pipeline over every combination, report bundles and corpus regression.

pub mod config;
pub mod corpus;
pub mod output;
pub mod pipeline;
pub mod plot;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::AnalysisConfig;
pub use corpus::{run_corpus, CorpusSummary, Sidecar};
pub use output::write_bundle;
pub use pipeline::{run_analyze, Bundle};

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl AnalyzeError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AnalyzeError::Io { path: path.to_path_buf(), source }
    }
}
