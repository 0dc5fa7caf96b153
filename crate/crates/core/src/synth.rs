//! Synthetic cohorts shaped like the task-density experiment.
//!
//! Every subject completes seven consecutive segments at one of three
//! workload levels. Segment orderings cover each of the six ordered level
//! transitions exactly once. Component traces follow the active level plus
//! AR(1) noise; the overall channel is their sum.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{SubjectSeries, WorkloadComponent};
use crate::seed::derive_seed;

pub const N_SEGMENTS: usize = 7;

const DEFAULTS_TOML: &str = include_str!("../configs/synth_defaults.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthesis parameters: {0}")]
    InvalidParams(String),
    #[error("ordering {0} violates the transition constraint")]
    InvalidOrdering(Ordering),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadLevel {
    Underload,
    NormalLoad,
    Overload,
}

impl WorkloadLevel {
    pub const ALL: [WorkloadLevel; 3] = [
        WorkloadLevel::Underload,
        WorkloadLevel::NormalLoad,
        WorkloadLevel::Overload,
    ];

    fn short(self) -> char {
        match self {
            WorkloadLevel::Underload => 'U',
            WorkloadLevel::NormalLoad => 'N',
            WorkloadLevel::Overload => 'O',
        }
    }
}

/// Levels of the seven segments of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ordering(pub [WorkloadLevel; N_SEGMENTS]);

impl Ordering {
    /// True when no level repeats back to back and each ordered pair of
    /// distinct levels occurs exactly once among the six transitions.
    pub fn is_valid(&self) -> bool {
        let mut seen = [[false; 3]; 3];
        for pair in self.0.windows(2) {
            let (a, b) = (pair[0] as usize, pair[1] as usize);
            if a == b || seen[a][b] {
                return false;
            }
            seen[a][b] = true;
        }
        true
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.0 {
            write!(f, "{}", l.short())?;
        }
        Ok(())
    }
}

/// All valid orderings, in lexicographic order of their levels.
pub fn enumerate_orderings() -> Vec<Ordering> {
    fn extend(
        seq: &mut Vec<WorkloadLevel>,
        used: &mut [[bool; 3]; 3],
        out: &mut Vec<Ordering>,
    ) {
        if seq.len() == N_SEGMENTS {
            out.push(Ordering(seq.as_slice().try_into().expect("seven levels")));
            return;
        }
        let last = *seq.last().expect("non-empty prefix") as usize;
        for next in WorkloadLevel::ALL {
            let n = next as usize;
            if n != last && !used[last][n] {
                used[last][n] = true;
                seq.push(next);
                extend(seq, used, out);
                seq.pop();
                used[last][n] = false;
            }
        }
    }

    let mut out = Vec::new();
    for first in WorkloadLevel::ALL {
        extend(&mut vec![first], &mut [[false; 3]; 3], &mut out);
    }
    out
}

/// Per-level mean of each of the seven components, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseLevels {
    pub underload: [f64; 7],
    pub normal_load: [f64; 7],
    pub overload: [f64; 7],
}

impl BaseLevels {
    pub fn level(&self, level: WorkloadLevel) -> &[f64; 7] {
        match level {
            WorkloadLevel::Underload => &self.underload,
            WorkloadLevel::NormalLoad => &self.normal_load,
            WorkloadLevel::Overload => &self.overload,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthParams {
    pub segment_duration_s: f64,
    pub sample_period_s: f64,
    pub base_levels: BaseLevels,
    pub ar1_coefficient: f64,
    pub noise_sd: f64,
    pub transition_ramp_s: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    /// Parameters from `configs/synth_defaults.toml`.
    fn default() -> Self {
        toml::from_str(DEFAULTS_TOML).expect("bundled synth defaults parse")
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidParams(m.to_string()));
        if !(self.sample_period_s > 0.0 && self.segment_duration_s > 0.0) {
            return bad("durations must be positive");
        }
        let per_segment = self.segment_duration_s / self.sample_period_s;
        if (per_segment - per_segment.round()).abs() > 1e-9 {
            return bad("segment duration must be a multiple of the sample period");
        }
        if !(0.0..1.0).contains(&self.ar1_coefficient) {
            return bad("ar1_coefficient must lie in [0, 1)");
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be non-negative");
        }
        if !(self.transition_ramp_s >= 0.0 && self.transition_ramp_s < self.segment_duration_s) {
            return bad("transition_ramp_s must be non-negative and shorter than a segment");
        }
        let levels = &self.base_levels;
        if [&levels.underload, &levels.normal_load, &levels.overload]
            .iter()
            .any(|l| l.iter().any(|v| !v.is_finite()))
        {
            return bad("base levels must be finite");
        }
        Ok(())
    }

    pub fn samples_per_segment(&self) -> usize {
        (self.segment_duration_s / self.sample_period_s).round() as usize
    }

    pub fn n_samples(&self) -> usize {
        self.samples_per_segment() * N_SEGMENTS
    }
}

/// Noise-free level of one component at time `t` (seconds from trial start).
fn level_at(ordering: &Ordering, p: &SynthParams, component: usize, t: f64) -> f64 {
    let seg_len = p.segment_duration_s;
    let seg = ((t / seg_len).floor() as usize).min(N_SEGMENTS - 1);
    let value = |s: usize| p.base_levels.level(ordering.0[s])[component];
    if p.transition_ramp_s <= 0.0 {
        return value(seg);
    }
    // ramps are centred on each boundary
    let half = p.transition_ramp_s / 2.0;
    let boundary = |s: usize| s as f64 * seg_len;
    if seg > 0 && t < boundary(seg) + half {
        let frac = (t - (boundary(seg) - half)) / p.transition_ramp_s;
        return value(seg - 1) + (value(seg) - value(seg - 1)) * frac;
    }
    if seg + 1 < N_SEGMENTS && t >= boundary(seg + 1) - half {
        let frac = (t - (boundary(seg + 1) - half)) / p.transition_ramp_s;
        return value(seg) + (value(seg + 1) - value(seg)) * frac;
    }
    value(seg)
}

/// Noise-free component traces for an ordering (the overall channel is their sum).
pub fn noiseless_levels(ordering: &Ordering, p: &SynthParams) -> [Vec<f64>; 7] {
    std::array::from_fn(|c| {
        (0..p.n_samples())
            .map(|i| level_at(ordering, p, c, i as f64 * p.sample_period_s))
            .collect()
    })
}

/// Generates one subject's trace. Noise streams are seeded from
/// `p.seed`, the subject id and the component.
pub fn synthesize_subject(
    ordering: &Ordering,
    p: &SynthParams,
    subject_id: &str,
) -> Result<SubjectSeries, SynthError> {
    p.validate()?;
    if !ordering.is_valid() {
        return Err(SynthError::InvalidOrdering(*ordering));
    }
    let n = p.n_samples();
    let levels = noiseless_levels(ordering, p);
    let phi = p.ar1_coefficient;
    let stationary_sd = p.noise_sd / (1.0 - phi * phi).sqrt();

    let mut channels: [Vec<f64>; 8] = Default::default();
    for c in WorkloadComponent::COMPONENTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(p.seed, &[subject_id, c.column()]));
        let innovation = Normal::new(0.0, p.noise_sd).expect("finite noise sd");
        let start = Normal::new(0.0, stationary_sd).expect("finite noise sd");
        let mut noise = start.sample(&mut rng);
        let values = &mut channels[c.index()];
        values.reserve(n);
        for (i, level) in levels[c.index()].iter().enumerate() {
            if i > 0 {
                noise = phi * noise + innovation.sample(&mut rng);
            }
            values.push(level + noise);
        }
    }
    let overall: Vec<f64> = (0..n)
        .map(|i| {
            WorkloadComponent::COMPONENTS
                .iter()
                .map(|c| channels[c.index()][i])
                .sum()
        })
        .collect();
    channels[WorkloadComponent::Overall.index()] = overall;

    Ok(SubjectSeries::new(subject_id, p.sample_period_s, 0.0, channels)
        .expect("synthesized series are valid"))
}

/// Subject ids `s01`, `s02`, ... padded to the cohort size.
pub fn subject_ids(n_subjects: usize) -> Vec<String> {
    let width = n_subjects.to_string().len().max(2);
    (1..=n_subjects).map(|i| format!("s{i:0width$}")).collect()
}

/// Generates `n_subjects` subjects, assigning orderings round-robin.
pub fn synthesize_cohort(
    n_subjects: usize,
    p: &SynthParams,
) -> Result<Vec<(Ordering, SubjectSeries)>, SynthError> {
    if n_subjects == 0 {
        return Err(SynthError::InvalidParams("cohort needs at least one subject".into()));
    }
    let orderings = enumerate_orderings();
    subject_ids(n_subjects)
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let ordering = orderings[i % orderings.len()];
            let subject_params = SynthParams {
                seed: derive_seed(p.seed, &["subject", &i.to_string()]),
                ..p.clone()
            };
            Ok((ordering, synthesize_subject(&ordering, &subject_params, &id)?))
        })
        .collect()
}
