//! Experiment runner behind the `pg` command.

pub mod config;
pub mod experiments;
pub mod output;

use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::run_experiment;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("mixed provenance: {0}")]
    MixedManifest(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Artifact(#[from] pgrowth::io::IoError),
}

impl HarnessError {
    /// `1` for usage problems, `2` for failures found while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Wraps a simulation error as an internal validation failure.
pub(crate) fn validation(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Validation(e.to_string())
}
