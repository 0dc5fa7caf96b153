//! End-to-end runs on small synthetic cohorts.

use std::collections::BTreeSet;

use workload_forecast::data::{SubjectSeries, WorkloadComponent};
use workload_forecast::experiment::{
    analyze_lag_horizons, read_results, run_experiment, write_results, ExperimentConfig,
    ExperimentError, ResultsFile,
};
use workload_forecast::forecaster::TrainConfig;
use workload_forecast::stats::mean_sd;
use workload_forecast::synth::{synthesize_cohort, SynthParams};
use workload_forecast::window::InputMode;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        modes: vec![InputMode::Univariate],
        components: vec![WorkloadComponent::Overall, WorkloadComponent::Cognitive],
        lag_grid_s: vec![30, 60, 240],
        pred_grid_s: vec![60],
        train: TrainConfig {
            max_epochs: 3,
            patience: 2,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

fn cohort(n: usize) -> Vec<SubjectSeries> {
    synthesize_cohort(n, &SynthParams::default())
        .unwrap()
        .into_iter()
        .map(|(_, s)| s)
        .collect()
}

/// The first `n` samples of `s` under a new id.
fn truncated(s: &SubjectSeries, id: &str, n: usize) -> SubjectSeries {
    let channels = s.channels.clone().map(|c| c[..n].to_vec());
    SubjectSeries::new(id, s.sample_period_s, s.start_time_s, channels).unwrap()
}

#[test]
fn grid_aggregates_and_subject_sets() {
    let cfg = small_config();
    let mut subjects = cohort(4);
    // 300 samples: 60 per block, enough for a 30 s or 60 s lag but not 240 s
    subjects.push(truncated(&subjects[0], "short", 300));
    let out = run_experiment(&cfg, &subjects, 2).unwrap();

    // modes x components x lags x preds
    assert_eq!(out.cells.len(), 2 * 3);
    for c in &out.cells {
        let values: Vec<f64> = c.per_subject_rho.values().copied().collect();
        let (m, s) = mean_sd(&values);
        assert!((m - c.mean_rho).abs() < 1e-12 && (s - c.sd_rho).abs() < 1e-12);
        assert!(values.iter().all(|r| (-1.0..=1.0).contains(r)));
        for (id, folds) in &c.per_subject_folds {
            assert_eq!(folds.len(), 5);
            let valid: Vec<f64> = folds.iter().flatten().copied().collect();
            if let Some(r) = c.per_subject_rho.get(id) {
                assert!((r - valid.iter().sum::<f64>() / valid.len() as f64).abs() < 1e-15);
            }
        }
        let scored: BTreeSet<&str> = c.per_subject_folds.keys().map(String::as_str).collect();
        if c.lag_s == 240 {
            assert_eq!(c.ineligible_subjects, vec!["short".to_string()]);
            assert!(!scored.contains("short"));
        } else {
            assert!(c.ineligible_subjects.is_empty());
            assert!(scored.contains("short"));
        }
    }
    // the ineligible subject never trains a 240 s model either
    for a in out.audits.iter().filter(|a| a.cell.lag_s == 240) {
        assert!(!a.train_window_subjects.contains_key("short"));
    }
    for a in &out.audits {
        assert!(!a.train_window_subjects.contains_key(&a.test_subject));
    }

    let analyses = analyze_lag_horizons(&out.cells).unwrap();
    assert_eq!(analyses.len(), 2);
    for a in &analyses {
        assert_eq!(a.pairwise.len(), 3);
        assert_eq!(a.subjects.len(), 4, "the short subject is missing one column");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = ExperimentConfig {
        components: vec![WorkloadComponent::Overall],
        modes: vec![InputMode::Univariate, InputMode::Multivariate],
        lag_grid_s: vec![30, 60],
        ..small_config()
    };
    let subjects = cohort(3);
    let a = run_experiment(&cfg, &subjects, 1).unwrap();
    let b = run_experiment(&cfg, &subjects, 3).unwrap();
    assert_eq!(a, b);
    let c = run_experiment(&ExperimentConfig { seed: 8, ..cfg }, &subjects, 1).unwrap();
    assert_ne!(a.cells, c.cells);
}

#[test]
fn too_few_eligible_subjects() {
    let cfg = small_config();
    let subjects = cohort(1);
    assert!(matches!(
        run_experiment(&cfg, &subjects, 1),
        Err(ExperimentError::Window(_))
    ));
}

#[test]
fn results_file_round_trip() {
    let cfg = ExperimentConfig {
        components: vec![WorkloadComponent::Overall],
        lag_grid_s: vec![30, 60, 120],
        ..small_config()
    };
    let out = run_experiment(&cfg, &cohort(3), 1).unwrap();
    let analyses = analyze_lag_horizons(&out.cells).unwrap();
    let results = ResultsFile::new(cfg, out.cells, analyses);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("results.json");
    write_results(&path, &results).unwrap();
    let first = std::fs::read(&path).unwrap();
    assert_eq!(read_results(&path).unwrap(), results);
    write_results(&path, &read_results(&path).unwrap()).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = write_results(&blocker.join("results.json"), &results).unwrap_err();
    assert!(matches!(err, ExperimentError::Io { .. }));
    assert!(err.is_runtime());
}

#[test]
fn sample_statistics_of_subject_scores() {
    let (m, s) = mean_sd(&[0.6, 0.7, 0.8]);
    assert!((m - 0.70).abs() < 1e-12);
    assert!((s - 0.10).abs() < 1e-12);
}
