use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analysis::LagAnalysis;
use super::config::ExperimentConfig;
use super::runner::CellResult;
use super::ExperimentError;

pub const RESULTS_FORMAT: &str = "workload-forecast-results";
pub const RESULTS_VERSION: u32 = 1;

/// Everything a run produced. Holds no timestamps or worker counts, so two
/// runs of the same config serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub format: String,
    pub version: u32,
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
    /// Empty when the grid has fewer than three lag columns.
    pub analyses: Vec<LagAnalysis>,
}

impl ResultsFile {
    pub fn new(config: ExperimentConfig, cells: Vec<CellResult>, analyses: Vec<LagAnalysis>) -> Self {
        ResultsFile {
            format: RESULTS_FORMAT.to_string(),
            version: RESULTS_VERSION,
            config,
            cells,
            analyses,
        }
    }
}

pub fn write_results(path: &Path, results: &ResultsFile) -> Result<(), ExperimentError> {
    let mut text =
        serde_json::to_string_pretty(results).map_err(|e| ExperimentError::Json(e.to_string()))?;
    text.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| ExperimentError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| ExperimentError::io(path, e))
}

pub fn read_results(path: &Path) -> Result<ResultsFile, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    let r: ResultsFile =
        serde_json::from_str(&text).map_err(|e| ExperimentError::Json(e.to_string()))?;
    if r.format != RESULTS_FORMAT || r.version != RESULTS_VERSION {
        return Err(ExperimentError::Json(format!(
            "unsupported results format {} v{}",
            r.format, r.version
        )));
    }
    Ok(r)
}
