use mhd1d_core::{DiagnosticsError, InitError, ModelError, ReconstructionError, SchemeError};
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("initial data: {0}")]
    Init(#[from] InitError),
    #[error("solver: {0}")]
    Scheme(#[from] SchemeError),
    #[error("diagnostics: {0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("volume reconstruction: {0}")]
    Reconstruction(#[from] ReconstructionError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Failed(String),
    #[error("{failed} acceptance criteria failed")]
    Acceptance { failed: usize },
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 1 for usage and configuration problems, 2 for
    /// numerical or output failures, 3 for failed acceptance criteria.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 1,
            HarnessError::Acceptance { .. } => 3,
            _ => 2,
        }
    }
}
