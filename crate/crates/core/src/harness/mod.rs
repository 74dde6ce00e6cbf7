//! Configuration loading, experiment orchestration and result files.

pub mod config;
pub mod manifest;
pub mod metrics;
pub mod plot_data;
pub mod run;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::agent::AgentError;
use crate::baselines::BaselineError;
use crate::env::EnvError;

pub use config::{load_config, ExperimentConfig, Method, SweepAxis, TableSource};
pub use manifest::Manifest;
pub use metrics::{EpisodeDelay, MetricsRecord, RewardPoint};
pub use plot_data::plot_data_command;
pub use run::{
    eval_seed, evaluate_controller, experiment_command, run_experiment, train_command, Controller, EvalRun,
    ExperimentOutcome, RunLabel,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("budget parity violated: {method} spent {spent} evaluations in a slot, expected {expected}")]
    BudgetParity { method: String, expected: u64, spent: u64 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
