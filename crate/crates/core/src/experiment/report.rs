//! Plain-text tables and lag-analysis summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::analysis::{LagAnalysis, PairOutcome};
use super::runner::CellResult;
use super::ExperimentError;
use crate::data::WorkloadComponent;
use crate::stats::{classify_band, format_friedman, PValueMethod};
use crate::window::InputMode;

/// `mean (std)` with two decimals, e.g. `0.68 (0.09)`.
pub fn format_cell(mean: f64, sd: f64) -> String {
    format!("{mean:.2} ({sd:.2})")
}

/// Spearman table for one mode and component: prediction horizons as rows,
/// lag horizons as columns.
pub fn render_table(
    results: &[CellResult],
    mode: InputMode,
    component: WorkloadComponent,
) -> Result<String, ExperimentError> {
    let cells: BTreeMap<(u32, u32), &CellResult> = results
        .iter()
        .filter(|c| c.mode == mode && c.component == component)
        .map(|c| ((c.pred_s, c.lag_s), c))
        .collect();
    if cells.is_empty() {
        return Err(ExperimentError::IncompleteGrid(format!(
            "no results for {mode} {component}"
        )));
    }
    let preds: BTreeSet<u32> = cells.keys().map(|k| k.0).collect();
    let lags: BTreeSet<u32> = cells.keys().map(|k| k.1).collect();
    for &p in &preds {
        for &l in &lags {
            if !cells.contains_key(&(p, l)) {
                return Err(ExperimentError::IncompleteGrid(format!(
                    "{mode} {component}: missing {p}s prediction / {l}s lag"
                )));
            }
        }
    }

    const ROW_LABEL: usize = 12;
    const COL: usize = 13;
    let mut out = String::new();
    writeln!(
        out,
        "{} ({mode}) Spearman correlation, mean (std)",
        component.title()
    )
    .unwrap();
    write!(out, "{:ROW_LABEL$}", "").unwrap();
    for l in &lags {
        write!(out, "{:>COL$}", format!("{l}s Lag")).unwrap();
    }
    out.push('\n');
    for p in &preds {
        write!(out, "{:<ROW_LABEL$}", format!("{p}s Pred.")).unwrap();
        for l in &lags {
            let c = cells[&(*p, *l)];
            write!(out, "{:>COL$}", format_cell(c.mean_rho, c.sd_rho)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Every (mode, component) table present in `results`, separated by blank lines.
pub fn render_all_tables(results: &[CellResult]) -> Result<String, ExperimentError> {
    let keys: BTreeSet<(InputMode, WorkloadComponent)> =
        results.iter().map(|c| (c.mode, c.component)).collect();
    let tables = keys
        .into_iter()
        .map(|(m, c)| render_table(results, m, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(tables.join("\n"))
}

/// Band of each cell's mean correlation, one line per cell.
pub fn render_bands(results: &[CellResult]) -> String {
    let mut out = String::new();
    for c in results {
        writeln!(
            out,
            "{} {} {}s pred / {}s lag: {:.2} {}",
            c.mode,
            c.component,
            c.pred_s,
            c.lag_s,
            c.mean_rho,
            classify_band(c.mean_rho)
        )
        .unwrap();
    }
    out
}

/// Friedman and pairwise Wilcoxon summaries.
pub fn render_lag_analysis(analyses: &[LagAnalysis]) -> String {
    let mut out = String::new();
    for a in analyses {
        writeln!(
            out,
            "{} ({}) {}s prediction: {}",
            a.component.title(),
            a.mode,
            a.pred_s,
            format_friedman(&a.friedman)
        )
        .unwrap();
        for p in &a.pairwise {
            let detail = match &p.result {
                PairOutcome::AllTied => "all differences zero".to_string(),
                PairOutcome::Tested(w) => {
                    let p_text = if w.p < 0.001 {
                        "p < 0.001".to_string()
                    } else {
                        format!("p = {:.3}", w.p)
                    };
                    let method = match w.method {
                        PValueMethod::Exact => "exact",
                        PValueMethod::NormalApprox => "normal",
                    };
                    let d = w
                        .cohens_d
                        .map_or_else(|| "undefined".to_string(), |d| format!("{d:.2}"));
                    format!(
                        "W = {:.1}, {p_text} ({method}, n = {}), Cohen's d = {d}",
                        w.w_statistic, w.n_effective
                    )
                }
            };
            writeln!(
                out,
                "  {}s vs {}s lag: {detail}",
                p.shorter_lag_s, p.longer_lag_s
            )
            .unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn cell(lag: u32, pred: u32, mean: f64, sd: f64) -> CellResult {
        CellResult {
            mode: InputMode::Univariate,
            component: WorkloadComponent::Overall,
            lag_s: lag,
            pred_s: pred,
            per_subject_rho: BTreeMap::new(),
            per_subject_folds: BTreeMap::new(),
            mean_rho: mean,
            sd_rho: sd,
            dropped_subjects: vec![],
            ineligible_subjects: vec![],
        }
    }

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.68, 0.09), "0.68 (0.09)");
        assert_eq!(format_cell(0.70, 0.05), "0.70 (0.05)");
        assert_eq!(format_cell(0.5749, 0.1251), "0.57 (0.13)");
    }

    #[test]
    fn table_layout() {
        let mut cells = Vec::new();
        for (pi, p) in [60, 120, 240].iter().enumerate() {
            for (li, l) in [30, 60, 120, 240].iter().enumerate() {
                cells.push(cell(*l, *p, 0.1 * (pi + li) as f64, 0.01));
            }
        }
        cells[3].mean_rho = 0.68;
        cells[3].sd_rho = 0.09;
        let t = render_table(&cells, InputMode::Univariate, WorkloadComponent::Overall).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].contains("30s Lag") && lines[1].trim_end().ends_with("240s Lag"));
        assert!(lines[2].starts_with("60s Pred."));
        assert!(lines[2].ends_with("0.68 (0.09)"));
        assert!(lines[4].starts_with("240s Pred."));
        assert!(render_table(&cells, InputMode::Multivariate, WorkloadComponent::Overall).is_err());

        cells.remove(5);
        assert!(matches!(
            render_table(&cells, InputMode::Univariate, WorkloadComponent::Overall),
            Err(ExperimentError::IncompleteGrid(_))
        ));
    }
}
