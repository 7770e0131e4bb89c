//! End-to-end orchestration: align, characterize, fit, score, filter, and
//! report. Every command writes its outputs and a manifest to the output
//! directory.

mod config;
mod run;
pub mod synth;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    Needs, PathsConfig, PipelineConfig, ProviderConfig, ProviderKind, ReferenceConfig,
};
pub use run::{
    build_scorer, load_resources, run_align, run_fit_reference, run_mine, run_sari, run_score,
    run_stats, AlignOutcome, FitOutcome, Manifest, MineOutcome, Resources, S4sRecord, SariLine,
    SariOutcome, SkipRecord, StageCounts, StatsOptions,
};

use crate::attributes::AttributeError;
use crate::corpus::CorpusError;
use crate::embedding::EmbeddingError;
use crate::filterer::FilterError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("provider error: {0}")]
    Provider(#[from] EmbeddingError),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl PipelineError {
    /// Process exit status: 1 config, 2 provider, 3 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Provider(_) => 2,
            PipelineError::Data(_) | PipelineError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<AttributeError> for PipelineError {
    fn from(e: AttributeError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<FilterError> for PipelineError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::Config(m) => PipelineError::Config(m),
            FilterError::Attribute(a) => a.into(),
            FilterError::Corpus(c) => c.into(),
            other => PipelineError::Data(other.to_string()),
        }
    }
}
