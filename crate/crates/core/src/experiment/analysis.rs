use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::runner::CellResult;
use super::ExperimentError;
use crate::data::WorkloadComponent;
use crate::stats::{friedman_test, wilcoxon_signed_rank, FriedmanResult, StatsError, WilcoxonResult};
use crate::window::InputMode;

/// Outcome of comparing two lag columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PairOutcome {
    Tested(WilcoxonResult),
    /// Every paired difference was zero.
    AllTied,
}

/// Wilcoxon comparison of a shorter and a longer lag horizon. Differences
/// are taken as longer minus shorter, so a positive Cohen's d means the
/// longer lag scored higher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseLag {
    pub shorter_lag_s: u32,
    pub longer_lag_s: u32,
    pub result: PairOutcome,
}

/// Lag-horizon analysis for one (mode, component, prediction horizon).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagAnalysis {
    pub mode: InputMode,
    pub component: WorkloadComponent,
    pub pred_s: u32,
    pub lags_s: Vec<u32>,
    /// Subjects scored in every lag column; rows of the Friedman matrix.
    pub subjects: Vec<String>,
    pub friedman: FriedmanResult,
    pub pairwise: Vec<PairwiseLag>,
}

/// Friedman test across lag columns plus all pairwise Wilcoxon tests, for
/// each (mode, component, prediction horizon) in `results`.
pub fn analyze_lag_horizons(results: &[CellResult]) -> Result<Vec<LagAnalysis>, ExperimentError> {
    let mut groups: BTreeMap<(InputMode, WorkloadComponent, u32), BTreeMap<u32, &CellResult>> =
        BTreeMap::new();
    for cell in results {
        groups
            .entry((cell.mode, cell.component, cell.pred_s))
            .or_default()
            .insert(cell.lag_s, cell);
    }

    let mut out = Vec::with_capacity(groups.len());
    for ((mode, component, pred_s), columns) in groups {
        let label = format!("{mode} {component} {pred_s}s prediction");
        if columns.len() < 3 {
            return Err(ExperimentError::InsufficientColumns(format!(
                "{label}: {} lag column(s), need 3",
                columns.len()
            )));
        }
        let mut common: Option<BTreeSet<&String>> = None;
        for cell in columns.values() {
            let ids: BTreeSet<&String> = cell.per_subject_rho.keys().collect();
            common = Some(match common {
                None => ids,
                Some(c) => c.intersection(&ids).copied().collect(),
            });
        }
        let subjects: Vec<String> = common
            .unwrap_or_default()
            .into_iter()
            .cloned()
            .collect();
        if subjects.len() < 2 {
            return Err(ExperimentError::InsufficientColumns(format!(
                "{label}: {} subject(s) common to all lag columns, need 2",
                subjects.len()
            )));
        }

        let lags_s: Vec<u32> = columns.keys().copied().collect();
        let column = |lag: u32| -> Vec<f64> {
            subjects
                .iter()
                .map(|id| columns[&lag].per_subject_rho[id])
                .collect()
        };
        let matrix: Vec<Vec<f64>> = subjects
            .iter()
            .map(|id| lags_s.iter().map(|l| columns[l].per_subject_rho[id]).collect())
            .collect();
        let friedman = friedman_test(&matrix)?;

        let mut pairwise = Vec::new();
        for (i, &short) in lags_s.iter().enumerate() {
            for &long in &lags_s[i + 1..] {
                let result = match wilcoxon_signed_rank(&column(long), &column(short)) {
                    Ok(r) => PairOutcome::Tested(r),
                    Err(StatsError::AllZeroDifferences) => PairOutcome::AllTied,
                    Err(e) => return Err(e.into()),
                };
                pairwise.push(PairwiseLag {
                    shorter_lag_s: short,
                    longer_lag_s: long,
                    result,
                });
            }
        }
        out.push(LagAnalysis {
            mode,
            component,
            pred_s,
            lags_s,
            subjects,
            friedman,
            pairwise,
        });
    }
    Ok(out)
}
