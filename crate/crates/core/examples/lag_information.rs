//! How much does a longer lag help a linear forecaster on the synthetic
//! cohort, and how much of the per-cell score comes from the evaluation span?
//!
//! Fits least squares on the leave-one-subject-out training windows for each
//! lag and scores the held-out subject with the blocked per-fold Spearman
//! protocol, twice: on each lag's own evaluation windows, and on the target
//! samples every lag can reach (the last `block - (longest span - 1)` of each
//! block).
//!
//! ```text
//! cargo run --release -p workload-forecast --example lag_information -- [noise_sd] [ramp_s]
//! ```

use workload_forecast::data::{SubjectSeries, WorkloadComponent};
use workload_forecast::stats::spearman_rho;
use workload_forecast::synth::{synthesize_cohort, SynthParams};
use workload_forecast::window::{
    build_windows, partition_blocked_folds, ForecastMode, HorizonConfig, InputMode, WindowSample,
    LAG_GRID_S,
};

const PRED_S: u32 = 60;
const TEST_SUBJECTS: usize = 8;

/// Least squares with intercept via the normal equations.
fn least_squares(windows: &[WindowSample]) -> Vec<f64> {
    let d = windows[0].features.len() + 1;
    let mut a = vec![vec![0.0; d + 1]; d];
    for w in windows {
        let x: Vec<f64> = w.features.iter().copied().chain([1.0]).collect();
        for i in 0..d {
            for j in 0..d {
                a[i][j] += x[i] * x[j];
            }
            a[i][d] += x[i] * w.target;
        }
    }
    for c in 0..d {
        let p = (c..d)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        for r in 0..d {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=d {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..d).map(|i| a[i][d] / a[i][i]).collect()
}

fn mean_fold_rho(
    test: &SubjectSeries,
    h: &HorizonConfig,
    m: &ForecastMode,
    beta: &[f64],
    min_offset: usize,
) -> f64 {
    let plan = partition_blocked_folds(test.len(), 5).unwrap();
    let mut rhos = Vec::new();
    for block in plan.blocks() {
        let first = block.start + min_offset;
        let windows: Vec<_> = build_windows(test, h, m, Some(block))
            .unwrap()
            .into_iter()
            .filter(|w| w.target_index >= first)
            .collect();
        let pred: Vec<f64> = windows
            .iter()
            .map(|w| w.features.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>() + beta[beta.len() - 1])
            .collect();
        let truth: Vec<f64> = windows.iter().map(|w| w.target).collect();
        if let Ok(r) = spearman_rho(&pred, &truth) {
            rhos.push(r.rho);
        }
    }
    rhos.iter().sum::<f64>() / rhos.len() as f64
}

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let mut p = SynthParams::default();
    if let Some(&n) = args.first() {
        p.noise_sd = n;
    }
    if let Some(&r) = args.get(1) {
        p.transition_ramp_s = r;
    }
    let cohort: Vec<SubjectSeries> = synthesize_cohort(16, &p)
        .unwrap()
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let longest = HorizonConfig::new(*LAG_GRID_S.last().unwrap(), PRED_S).unwrap();
    let common_offset = longest.span_samples() - 1;

    println!(
        "noise_sd {}, ramp {} s, overall target, {PRED_S} s prediction, {TEST_SUBJECTS} held-out subjects",
        p.noise_sd, p.transition_ramp_s
    );
    println!("{:<14} {:>5} {:>10} {:>13}", "mode", "lag", "own span", "common span");
    for input in [InputMode::Univariate, InputMode::Multivariate] {
        let m = ForecastMode {
            input,
            target: WorkloadComponent::Overall,
        };
        for lag in LAG_GRID_S {
            let h = HorizonConfig::new(lag, PRED_S).unwrap();
            let (mut own, mut common) = (0.0, 0.0);
            for t in 0..TEST_SUBJECTS {
                let train: Vec<WindowSample> = cohort
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != t)
                    .flat_map(|(_, s)| build_windows(s, &h, &m, None).unwrap())
                    .collect();
                let beta = least_squares(&train);
                own += mean_fold_rho(&cohort[t], &h, &m, &beta, 0);
                common += mean_fold_rho(&cohort[t], &h, &m, &beta, common_offset);
            }
            let n = TEST_SUBJECTS as f64;
            println!(
                "{:<14} {:>4}s {:>10.3} {:>13.3}",
                input.to_string(),
                lag,
                own / n,
                common / n
            );
        }
    }
}
