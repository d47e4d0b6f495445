//! Experiment runner around [`ensemble_vqc_core`]: MNIST-style IDX ingestion,
//! experiment configuration, training/comparison/diagnostic commands with CSV
//! output, model checkpoints, and SVG plots.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod plot;

use std::process::ExitCode;

/// Command failure with the process exit code it maps to:
/// 1 usage/config, 2 data, 3 verification.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
            CliError::Verification(_) => ExitCode::from(3),
        }
    }
}

impl From<ensemble_vqc_core::Error> for CliError {
    fn from(e: ensemble_vqc_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
