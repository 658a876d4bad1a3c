//! Seeded, reproducible experiments over the `edm-core` models.
//!
//! An [`ExperimentConfig`] names one entry of the registry ([`Experiment`]),
//! a seed and a parameter table. [`run_experiment`] validates everything up
//! front, runs the trials on a rayon pool, and writes tidy CSVs named
//! `<experiment>_<metric>.csv` plus a JSON report. Outputs depend only on
//! `(config, seed)`: every trial draws from its own stream
//! `seed ⊕ trial_index` and results are reduced in trial order.

pub mod config;
pub mod experiments;
pub mod report;
pub mod table;

use std::path::PathBuf;
use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};
pub use report::{emit_plotdata, run_experiment, run_with_threads, ExperimentReport, PlotKind};
pub use table::Table;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "EDMLAB_THREADS";

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("experiment {experiment} failed: {message}")]
    Experiment { experiment: &'static str, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report for {experiment} has no {kind} series")]
    MissingSeries { experiment: &'static str, kind: PlotKind },
}

impl LabError {
    /// Process exit code: 2 for usage/config problems, 1 for everything
    /// that went wrong after validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            _ => 1,
        }
    }
}
