//! Grid runner, lag-horizon analysis and reporting.

mod analysis;
mod config;
mod report;
mod results;
mod runner;

use std::path::Path;

use thiserror::Error;

use crate::data::DataError;
use crate::forecaster::ModelError;
use crate::stats::StatsError;
use crate::synth::SynthError;
use crate::window::WindowError;

pub use analysis::{analyze_lag_horizons, LagAnalysis, PairOutcome, PairwiseLag};
pub use config::ExperimentConfig;
pub use report::{format_cell, render_all_tables, render_bands, render_lag_analysis, render_table};
pub use results::{read_results, write_results, ResultsFile, RESULTS_FORMAT, RESULTS_VERSION};
pub use runner::{
    grid_cells, prepare_cohort, run_experiment, synthesize_into_data_dir, CellKey, CellResult,
    EvalWindow, RunOutcome, TaskAudit,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("incomplete grid: {0}")]
    IncompleteGrid(String),
    #[error("insufficient lag columns: {0}")]
    InsufficientColumns(String),
    #[error("no subject produced a score for cell {0}")]
    EmptyCell(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("results file: {0}")]
    Json(String),
    #[error("{0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// Failures of the environment (filesystem, threads, numerics) rather
    /// than of the inputs.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            ExperimentError::Io { .. }
                | ExperimentError::Runtime(_)
                | ExperimentError::Model(ModelError::Diverged { .. })
                | ExperimentError::Data(DataError::Io { .. })
        )
    }
}
