use std::collections::{BTreeMap, BTreeSet};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError};
use crate::data::{load_cohort, write_cohort, SubjectSeries, WorkloadComponent};
use crate::forecaster::{train_early_stopping, ModelError, TrainConfig};
use crate::seed::derive_seed;
use crate::stats::{mean_sd, spearman_rho, StatsError};
use crate::synth::synthesize_cohort;
use crate::window::{
    build_windows, check_eligibility, plan_loso_cv, CvTask, ForecastMode, HorizonConfig,
    InputMode, WindowSample,
};

/// Identifies one (mode, component, lag, prediction) grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub mode: InputMode,
    pub component: WorkloadComponent,
    pub lag_s: u32,
    pub pred_s: u32,
}

impl CellKey {
    pub fn forecast_mode(&self) -> ForecastMode {
        ForecastMode {
            input: self.mode,
            target: self.component,
        }
    }

    pub fn horizon(&self) -> HorizonConfig {
        HorizonConfig::new(self.lag_s, self.pred_s).expect("cell horizons are validated")
    }

    fn labels(&self) -> [String; 4] {
        [
            self.mode.to_string(),
            self.component.to_string(),
            self.lag_s.to_string(),
            self.pred_s.to_string(),
        ]
    }
}

/// Spearman scores of one grid cell across test subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub mode: InputMode,
    pub component: WorkloadComponent,
    pub lag_s: u32,
    pub pred_s: u32,
    /// Mean of each subject's per-fold Spearman values.
    pub per_subject_rho: BTreeMap<String, f64>,
    /// Per-fold values; `None` marks a fold with constant predictions or truth.
    pub per_subject_folds: BTreeMap<String, Vec<Option<f64>>>,
    pub mean_rho: f64,
    pub sd_rho: f64,
    /// Eligible subjects whose every fold was degenerate.
    pub dropped_subjects: Vec<String>,
    /// Subjects excluded by the eligibility rule.
    pub ineligible_subjects: Vec<String>,
}

impl CellResult {
    pub fn key(&self) -> CellKey {
        CellKey {
            mode: self.mode,
            component: self.component,
            lag_s: self.lag_s,
            pred_s: self.pred_s,
        }
    }
}

/// One held-out window, located in the test subject's series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalWindow {
    pub fold: usize,
    pub start_index: usize,
    pub target_index: usize,
}

/// What one CV task actually consumed, for leakage audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAudit {
    pub cell: CellKey,
    pub test_subject: String,
    /// Count of training windows per originating subject.
    pub train_window_subjects: BTreeMap<String, usize>,
    pub fold_boundaries: Vec<usize>,
    pub eval_windows: Vec<EvalWindow>,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub cells: Vec<CellResult>,
    pub audits: Vec<TaskAudit>,
}

struct TaskOutcome {
    cell_index: usize,
    fold_rhos: Vec<Option<f64>>,
    audit: TaskAudit,
}

/// Loads the cohort from `data_dir`, or synthesizes it there when the
/// directory holds no series and synthesis parameters are configured.
pub fn prepare_cohort(cfg: &ExperimentConfig) -> Result<Vec<SubjectSeries>, ExperimentError> {
    let existing = if cfg.data_dir.is_dir() {
        load_cohort(&cfg.data_dir)?
    } else {
        Vec::new()
    };
    if !existing.is_empty() {
        return Ok(existing);
    }
    match &cfg.synth {
        Some(_) => synthesize_into_data_dir(cfg),
        None => Err(ExperimentError::Config(format!(
            "{} holds no series and no synth parameters are configured",
            cfg.data_dir.display()
        ))),
    }
}

/// Generates the configured synthetic cohort and writes it to `data_dir`.
pub fn synthesize_into_data_dir(
    cfg: &ExperimentConfig,
) -> Result<Vec<SubjectSeries>, ExperimentError> {
    let params = cfg
        .synth
        .as_ref()
        .ok_or_else(|| ExperimentError::Config("no synth parameters configured".into()))?;
    let cohort: Vec<SubjectSeries> = synthesize_cohort(cfg.n_subjects, params)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    write_cohort(&cfg.data_dir, &cohort)?;
    info!(
        "synthesized {} subjects into {}",
        cohort.len(),
        cfg.data_dir.display()
    );
    Ok(cohort)
}

/// Grid cells in canonical order: mode, component, prediction, lag.
pub fn grid_cells(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for &mode in &cfg.modes {
        for &component in &cfg.components {
            for &pred_s in &cfg.pred_grid_s {
                for &lag_s in &cfg.lag_grid_s {
                    cells.push(CellKey {
                        mode,
                        component,
                        lag_s,
                        pred_s,
                    });
                }
            }
        }
    }
    cells
}

/// Runs the full grid on `cohort` with up to `workers` threads.
///
/// Every task draws its randomness from a seed derived from the run seed,
/// the cell and the test subject, and results are reduced in canonical cell
/// and subject order, so output does not depend on `workers`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    cohort: &[SubjectSeries],
    workers: usize,
) -> Result<RunOutcome, ExperimentError> {
    cfg.validate()?;
    let by_id: BTreeMap<&str, &SubjectSeries> =
        cohort.iter().map(|s| (s.subject_id.as_str(), s)).collect();
    if by_id.len() != cohort.len() {
        return Err(ExperimentError::Config("duplicate subject ids in cohort".into()));
    }
    let metas: Vec<_> = cohort.iter().map(SubjectSeries::meta).collect();

    let cells = grid_cells(cfg);
    let mut jobs: Vec<(usize, CvTask)> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let tasks = plan_loso_cv(
            &metas,
            &cell.horizon(),
            &cell.forecast_mode(),
            cfg.folds,
            cfg.min_windows_per_fold,
        )?;
        jobs.extend(tasks.into_iter().map(|t| (i, t)));
    }
    info!(
        "{} cells, {} training tasks, {} worker(s)",
        cells.len(),
        jobs.len(),
        workers
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let outcomes: Vec<TaskOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|(i, task)| run_task(cfg, &cells[*i], *i, task, &by_id))
            .collect::<Result<_, _>>()
    })?;

    let mut per_cell: Vec<Vec<&TaskOutcome>> = vec![Vec::new(); cells.len()];
    for o in &outcomes {
        per_cell[o.cell_index].push(o);
    }
    let results = cells
        .iter()
        .zip(per_cell)
        .map(|(cell, tasks)| aggregate_cell(cfg, cell, &tasks, &metas))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunOutcome {
        cells: results,
        audits: outcomes.into_iter().map(|o| o.audit).collect(),
    })
}

fn run_task(
    cfg: &ExperimentConfig,
    cell: &CellKey,
    cell_index: usize,
    task: &CvTask,
    cohort: &BTreeMap<&str, &SubjectSeries>,
) -> Result<TaskOutcome, ExperimentError> {
    let horizon = task.config;
    let mode = task.mode;
    let mut train_windows: Vec<WindowSample> = Vec::new();
    for id in &task.train_subjects {
        let s = cohort[id.as_str()];
        train_windows.extend(build_windows(s, &horizon, &mode, None)?);
    }
    let mut train_window_subjects = BTreeMap::new();
    for w in &train_windows {
        *train_window_subjects.entry(w.subject_id.clone()).or_insert(0) += 1;
    }

    let labels = cell.labels();
    let mut seed_labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    seed_labels.push(&task.test_subject);
    let train_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, &seed_labels),
        ..cfg.train.clone()
    };
    let (model, report) =
        train_early_stopping(&train_windows, &train_cfg, mode.feature_len(&horizon))?;
    drop(train_windows);

    let test = cohort[task.test_subject.as_str()];
    let mut fold_rhos = Vec::with_capacity(task.fold_plan.k);
    let mut eval_windows = Vec::new();
    for (fold, block) in task.fold_plan.blocks().enumerate() {
        let windows = build_windows(test, &horizon, &mode, Some(block))?;
        let p = model.predict_windows(&windows)?;
        let t: Vec<f64> = windows.iter().map(|w| w.target).collect();
        eval_windows.extend(windows.iter().map(|w| EvalWindow {
            fold,
            start_index: w.start_index,
            target_index: w.target_index,
        }));
        match spearman_rho(&p, &t) {
            Ok(r) => fold_rhos.push(Some(r.rho)),
            Err(StatsError::ConstantInput) => {
                debug!(
                    "{cell:?} subject {} fold {fold}: constant input, fold skipped",
                    task.test_subject
                );
                fold_rhos.push(None);
            }
            Err(e) => return Err(e.into()),
        }
    }
    debug!(
        "{cell:?} test {}: {} epochs, best val {:.4}",
        task.test_subject, report.epochs_run, report.best_val_loss
    );

    Ok(TaskOutcome {
        cell_index,
        fold_rhos,
        audit: TaskAudit {
            cell: *cell,
            test_subject: task.test_subject.clone(),
            train_window_subjects,
            fold_boundaries: task.fold_plan.boundaries.clone(),
            eval_windows,
            epochs_run: report.epochs_run,
            best_val_loss: report.best_val_loss,
        },
    })
}

fn aggregate_cell(
    cfg: &ExperimentConfig,
    cell: &CellKey,
    tasks: &[&TaskOutcome],
    metas: &[crate::data::SeriesMeta],
) -> Result<CellResult, ExperimentError> {
    let mut per_subject_rho = BTreeMap::new();
    let mut per_subject_folds = BTreeMap::new();
    let mut dropped = Vec::new();
    for t in tasks {
        let id = t.audit.test_subject.clone();
        let valid: Vec<f64> = t.fold_rhos.iter().flatten().copied().collect();
        if valid.is_empty() {
            warn!("{cell:?}: every fold of subject {id} is degenerate; subject dropped");
            dropped.push(id.clone());
        } else {
            per_subject_rho.insert(id.clone(), valid.iter().sum::<f64>() / valid.len() as f64);
        }
        per_subject_folds.insert(id, t.fold_rhos.clone());
    }
    if per_subject_rho.is_empty() {
        return Err(ExperimentError::EmptyCell(format!("{cell:?}")));
    }
    let horizon = cell.horizon();
    let ineligible: BTreeSet<String> = metas
        .iter()
        .filter(|m| !check_eligibility(m, &horizon, cfg.folds, cfg.min_windows_per_fold))
        .map(|m| m.subject_id.clone())
        .collect();
    let values: Vec<f64> = per_subject_rho.values().copied().collect();
    let (mean_rho, sd_rho) = mean_sd(&values);
    dropped.sort();
    Ok(CellResult {
        mode: cell.mode,
        component: cell.component,
        lag_s: cell.lag_s,
        pred_s: cell.pred_s,
        per_subject_rho,
        per_subject_folds,
        mean_rho,
        sd_rho,
        dropped_subjects: dropped,
        ineligible_subjects: ineligible.into_iter().collect(),
    })
}

impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Window(w) => ExperimentError::Window(w),
            other => ExperimentError::Model(other),
        }
    }
}
