//! Direct-forecast windows and the leave-one-subject-out blocked CV plan.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{SeriesMeta, SubjectSeries, WorkloadComponent, BASE_PERIOD_S};

/// Longest lag + prediction span a five-fold block of a full trial supports.
pub const MAX_SPAN_S: u32 = 600;

/// Lag horizons of the study grid, in seconds.
pub const LAG_GRID_S: [u32; 4] = [30, 60, 120, 240];

/// Prediction horizons of the study grid, in seconds.
pub const PRED_GRID_S: [u32; 3] = [60, 120, 240];

pub const DEFAULT_FOLDS: usize = 5;

pub const DEFAULT_MIN_WINDOWS_PER_FOLD: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowError {
    #[error("horizon {lag_s}s lag / {pred_s}s prediction is invalid for a {step_s}s step: {reason}")]
    InvalidHorizon {
        lag_s: u32,
        pred_s: u32,
        step_s: u32,
        reason: &'static str,
    },
    #[error("{available} samples cannot form a window spanning {needed} samples")]
    InsufficientData { available: usize, needed: usize },
    #[error("range {start}..{end} lies outside a series of {len} samples")]
    RangeOutOfBounds { start: usize, end: usize, len: usize },
    #[error("{n_samples} samples cannot be split into {k} folds")]
    TooFewSamples { n_samples: usize, k: usize },
    #[error("need at least 2 eligible subjects, found {eligible}")]
    NoTrainingSubjects { eligible: usize },
}

/// Windowing geometry: lag horizon, prediction horizon and step, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HorizonConfig {
    pub lag_s: u32,
    pub pred_s: u32,
    pub step_s: u32,
}

impl HorizonConfig {
    /// A horizon on the 5 s base step.
    pub fn new(lag_s: u32, pred_s: u32) -> Result<Self, WindowError> {
        Self::with_step(lag_s, pred_s, BASE_PERIOD_S as u32)
    }

    pub fn with_step(lag_s: u32, pred_s: u32, step_s: u32) -> Result<Self, WindowError> {
        let invalid = |reason| WindowError::InvalidHorizon {
            lag_s,
            pred_s,
            step_s,
            reason,
        };
        if step_s == 0 || lag_s == 0 || pred_s == 0 {
            return Err(invalid("horizons and step must be positive"));
        }
        if !lag_s.is_multiple_of(step_s) || !pred_s.is_multiple_of(step_s) {
            return Err(invalid("horizons must be multiples of the step"));
        }
        if lag_s + pred_s > MAX_SPAN_S {
            return Err(invalid("lag + prediction exceeds 600 s"));
        }
        Ok(HorizonConfig {
            lag_s,
            pred_s,
            step_s,
        })
    }

    pub fn lag_samples(&self) -> usize {
        (self.lag_s / self.step_s) as usize
    }

    pub fn pred_samples(&self) -> usize {
        (self.pred_s / self.step_s) as usize
    }

    /// Samples covered from the first input to the target, inclusive.
    pub fn span_samples(&self) -> usize {
        self.lag_samples() + self.pred_samples()
    }

    /// Number of windows a range of `n` samples yields.
    pub fn window_count(&self, n: usize) -> usize {
        (n + 1).saturating_sub(self.span_samples())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    Univariate,
    Multivariate,
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputMode::Univariate => "univariate",
            InputMode::Multivariate => "multivariate",
        })
    }
}

impl std::str::FromStr for InputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "univariate" | "uni" => Ok(InputMode::Univariate),
            "multivariate" | "multi" => Ok(InputMode::Multivariate),
            other => Err(format!("unknown forecast mode `{other}`")),
        }
    }
}

/// Which channels feed the network and which one it predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ForecastMode {
    pub input: InputMode,
    pub target: WorkloadComponent,
}

impl ForecastMode {
    pub fn univariate(target: WorkloadComponent) -> Self {
        ForecastMode {
            input: InputMode::Univariate,
            target,
        }
    }

    pub fn multivariate(target: WorkloadComponent) -> Self {
        ForecastMode {
            input: InputMode::Multivariate,
            target,
        }
    }

    /// Input channels in feature order. Multivariate inputs are always the
    /// seven components, also when the target is the overall channel.
    pub fn input_channels(&self) -> Vec<WorkloadComponent> {
        match self.input {
            InputMode::Univariate => vec![self.target],
            InputMode::Multivariate => WorkloadComponent::COMPONENTS.to_vec(),
        }
    }

    pub fn feature_len(&self, cfg: &HorizonConfig) -> usize {
        cfg.lag_samples() * self.input_channels().len()
    }
}

/// One supervised example.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    /// Channel-major, time ascending within each channel.
    pub features: Vec<f64>,
    pub target: f64,
    /// Index of the first input sample in the source series.
    pub start_index: usize,
    /// Index of the target sample in the source series.
    pub target_index: usize,
    pub subject_id: String,
}

/// Builds every direct-forecast window inside `range` (whole series when `None`).
pub fn build_windows(
    s: &SubjectSeries,
    cfg: &HorizonConfig,
    mode: &ForecastMode,
    range: Option<Range<usize>>,
) -> Result<Vec<WindowSample>, WindowError> {
    let range = range.unwrap_or(0..s.len());
    if range.start > range.end || range.end > s.len() {
        return Err(WindowError::RangeOutOfBounds {
            start: range.start,
            end: range.end,
            len: s.len(),
        });
    }
    let count = cfg.window_count(range.len());
    if count == 0 {
        return Err(WindowError::InsufficientData {
            available: range.len(),
            needed: cfg.span_samples(),
        });
    }
    let lag = cfg.lag_samples();
    let inputs: Vec<&[f64]> = mode
        .input_channels()
        .into_iter()
        .map(|c| s.channel(c))
        .collect();
    let target = s.channel(mode.target);

    Ok((0..count)
        .map(|i| {
            let start = range.start + i;
            let mut features = Vec::with_capacity(lag * inputs.len());
            for channel in &inputs {
                features.extend_from_slice(&channel[start..start + lag]);
            }
            let target_index = start + lag - 1 + cfg.pred_samples();
            WindowSample {
                features,
                target: target[target_index],
                start_index: start,
                target_index,
                subject_id: s.subject_id.clone(),
            }
        })
        .collect())
}

/// Contiguous blocks partitioning `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// `k + 1` ascending indices; block `i` is `boundaries[i]..boundaries[i + 1]`.
    pub boundaries: Vec<usize>,
}

impl FoldPlan {
    pub fn block(&self, i: usize) -> Range<usize> {
        self.boundaries[i]..self.boundaries[i + 1]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.boundaries.windows(2).map(|w| w[0]..w[1])
    }
}

/// Splits `n_samples` into `k` near-equal contiguous blocks, remainder first.
pub fn partition_blocked_folds(n_samples: usize, k: usize) -> Result<FoldPlan, WindowError> {
    if k == 0 || n_samples < k {
        return Err(WindowError::TooFewSamples { n_samples, k });
    }
    let base = n_samples / k;
    let extra = n_samples % k;
    let mut boundaries = Vec::with_capacity(k + 1);
    boundaries.push(0);
    let mut at = 0;
    for i in 0..k {
        at += base + usize::from(i < extra);
        boundaries.push(at);
    }
    Ok(FoldPlan { k, boundaries })
}

/// True when each of the subject's `k` blocks yields at least
/// `min_windows_per_fold` windows under `cfg`.
pub fn check_eligibility(
    meta: &SeriesMeta,
    cfg: &HorizonConfig,
    k: usize,
    min_windows_per_fold: usize,
) -> bool {
    if k == 0 {
        return false;
    }
    let smallest_block = meta.n_samples / k;
    smallest_block + 1 >= cfg.span_samples() + min_windows_per_fold
}

/// One leave-one-subject-out evaluation unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTask {
    pub test_subject: String,
    pub train_subjects: BTreeSet<String>,
    pub fold_plan: FoldPlan,
    pub config: HorizonConfig,
    pub mode: ForecastMode,
}

/// Plans one task per eligible subject, training on every other eligible one.
pub fn plan_loso_cv(
    cohort: &[SeriesMeta],
    cfg: &HorizonConfig,
    mode: &ForecastMode,
    k: usize,
    min_windows_per_fold: usize,
) -> Result<Vec<CvTask>, WindowError> {
    let mut eligible: Vec<&SeriesMeta> = cohort
        .iter()
        .filter(|m| check_eligibility(m, cfg, k, min_windows_per_fold))
        .collect();
    eligible.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    eligible.dedup_by(|a, b| a.subject_id == b.subject_id);
    if eligible.len() < 2 {
        return Err(WindowError::NoTrainingSubjects {
            eligible: eligible.len(),
        });
    }
    eligible
        .iter()
        .map(|test| {
            Ok(CvTask {
                test_subject: test.subject_id.clone(),
                train_subjects: eligible
                    .iter()
                    .filter(|m| m.subject_id != test.subject_id)
                    .map(|m| m.subject_id.clone())
                    .collect(),
                fold_plan: partition_blocked_folds(test.n_samples, k)?,
                config: *cfg,
                mode: *mode,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp_series(id: &str, n: usize) -> SubjectSeries {
        let channels: [Vec<f64>; 8] =
            std::array::from_fn(|c| (0..n).map(|i| (c * 1000 + i) as f64).collect());
        SubjectSeries::new(id, 5.0, 0.0, channels).unwrap()
    }

    fn meta(id: &str, n: usize) -> SeriesMeta {
        SeriesMeta {
            subject_id: id.into(),
            duration_s: n as f64 * 5.0,
            n_samples: n,
        }
    }

    #[test]
    fn horizon_validation() {
        let cfg = HorizonConfig::new(240, 120).unwrap();
        assert_eq!((cfg.lag_samples(), cfg.pred_samples()), (48, 24));
        assert!(HorizonConfig::new(240, 240).is_ok());
        assert!(HorizonConfig::new(32, 60).is_err());
        assert!(HorizonConfig::new(0, 60).is_err());
        assert!(HorizonConfig::new(400, 240).is_err());
    }

    #[test]
    fn small_univariate_windows() {
        let s = ramp_series("a", 10);
        let cfg = HorizonConfig::new(15, 10).unwrap();
        let mode = ForecastMode::univariate(WorkloadComponent::Cognitive);
        let w = build_windows(&s, &cfg, &mode, None).unwrap();
        assert_eq!(w.len(), 6);
        assert_eq!(w[0].features, vec![0.0, 1.0, 2.0]);
        assert_eq!(w[0].target, 4.0);
        assert_eq!(w[0].target_index, 4);
        assert_eq!(w[5].target_index, 9);
    }

    #[test]
    fn full_trial_window_count() {
        let s = ramp_series("a", 630);
        let cfg = HorizonConfig::new(240, 120).unwrap();
        let mode = ForecastMode::univariate(WorkloadComponent::Overall);
        assert_eq!(build_windows(&s, &cfg, &mode, None).unwrap().len(), 559);
    }

    #[test]
    fn multivariate_features_skip_overall() {
        let s = ramp_series("a", 100);
        let cfg = HorizonConfig::new(240, 60).unwrap();
        let mode = ForecastMode::multivariate(WorkloadComponent::Overall);
        let w = build_windows(&s, &cfg, &mode, Some(10..70)).unwrap();
        assert_eq!(w[0].features.len(), 336);
        assert_eq!(w[0].features[0], 10.0);
        assert_eq!(w[0].features[48], 1010.0);
        assert_eq!(w[0].features[335], 6057.0);
        assert_eq!(w[0].target, 7000.0 + 10.0 + 47.0 + 12.0);
        assert!(w.iter().all(|x| x.features.iter().all(|&v| v < 7000.0)));
    }

    #[test]
    fn windows_need_enough_samples() {
        let s = ramp_series("a", 20);
        let cfg = HorizonConfig::new(30, 60).unwrap();
        let mode = ForecastMode::univariate(WorkloadComponent::Visual);
        assert!(matches!(
            build_windows(&s, &cfg, &mode, Some(0..17)),
            Err(WindowError::InsufficientData { .. })
        ));
        assert_eq!(build_windows(&s, &cfg, &mode, Some(0..18)).unwrap().len(), 1);
        assert!(matches!(
            build_windows(&s, &cfg, &mode, Some(5..21)),
            Err(WindowError::RangeOutOfBounds { .. })
        ));
    }

    #[test]
    fn fold_partitions() {
        assert_eq!(
            partition_blocked_folds(630, 5).unwrap().boundaries,
            vec![0, 126, 252, 378, 504, 630]
        );
        let sizes: Vec<usize> = partition_blocked_folds(7, 5)
            .unwrap()
            .blocks()
            .map(|b| b.len())
            .collect();
        assert_eq!(sizes, vec![2, 2, 1, 1, 1]);
        assert_eq!(
            partition_blocked_folds(4, 5),
            Err(WindowError::TooFewSamples { n_samples: 4, k: 5 })
        );
    }

    #[test]
    fn eligibility_rule() {
        let long = HorizonConfig::new(240, 120).unwrap();
        assert!(check_eligibility(&meta("a", 630), &long, 5, 1));
        assert!(!check_eligibility(&meta("a", 240), &long, 5, 1));
        let short = HorizonConfig::new(30, 60).unwrap();
        assert!(check_eligibility(&meta("a", 120), &short, 5, 1));
        // the boundary: 126 samples per block host exactly 126 - 72 + 1 windows
        assert!(check_eligibility(&meta("a", 630), &long, 5, 55));
        assert!(!check_eligibility(&meta("a", 630), &long, 5, 56));
    }

    #[test]
    fn loso_plans() {
        let cfg = HorizonConfig::new(240, 120).unwrap();
        let mode = ForecastMode::univariate(WorkloadComponent::Overall);
        let cohort = vec![meta("c", 630), meta("a", 630), meta("b", 630)];
        let tasks = plan_loso_cv(&cohort, &cfg, &mode, 5, 1).unwrap();
        let tests: Vec<_> = tasks.iter().map(|t| t.test_subject.as_str()).collect();
        assert_eq!(tests, ["a", "b", "c"]);
        for t in &tasks {
            assert_eq!(t.train_subjects.len(), 2);
            assert!(!t.train_subjects.contains(&t.test_subject));
        }

        let cohort = vec![meta("a", 630), meta("b", 630), meta("short", 240)];
        let tasks = plan_loso_cv(&cohort, &cfg, &mode, 5, 1).unwrap();
        assert_eq!(tasks.len(), 2);
        assert!(tasks.iter().all(|t| !t.train_subjects.contains("short")));

        let cohort = vec![meta("a", 630), meta("short", 240)];
        assert_eq!(
            plan_loso_cv(&cohort, &cfg, &mode, 5, 1),
            Err(WindowError::NoTrainingSubjects { eligible: 1 })
        );
    }

    proptest! {
        #[test]
        fn window_count_law(n in 1usize..300, lag in 1u32..30, pred in 1u32..30, multi: bool) {
            let s = ramp_series("p", n);
            let cfg = HorizonConfig::new(lag * 5, pred * 5).unwrap();
            let mode = if multi {
                ForecastMode::multivariate(WorkloadComponent::Overall)
            } else {
                ForecastMode::univariate(WorkloadComponent::Tactile)
            };
            let expected = n as i64 - (lag + pred) as i64 + 1;
            match build_windows(&s, &cfg, &mode, None) {
                Ok(w) => {
                    prop_assert_eq!(w.len() as i64, expected);
                    let channels = mode.input_channels();
                    let l = cfg.lag_samples();
                    for x in &w {
                        prop_assert_eq!(x.features.len(), l * channels.len());
                        prop_assert_eq!(x.target_index, x.start_index + l - 1 + cfg.pred_samples());
                        prop_assert_eq!(x.target, s.channel(mode.target)[x.target_index]);
                        for (ci, c) in channels.iter().enumerate() {
                            prop_assert_eq!(
                                &x.features[ci * l..(ci + 1) * l],
                                &s.channel(*c)[x.start_index..x.start_index + l]
                            );
                        }
                    }
                }
                Err(WindowError::InsufficientData { .. }) => prop_assert!(expected < 1),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn folds_reassemble(n in 1usize..5000, k in 1usize..12) {
            prop_assume!(n >= k);
            let plan = partition_blocked_folds(n, k).unwrap();
            prop_assert_eq!(plan.boundaries.len(), k + 1);
            let joined: Vec<usize> = plan.blocks().flatten().collect();
            prop_assert_eq!(joined, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = plan.blocks().map(|b| b.len()).collect();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
