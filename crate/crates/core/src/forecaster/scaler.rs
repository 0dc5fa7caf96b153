use serde::{Deserialize, Serialize};

use crate::window::WindowSample;

/// Per-dimension z-scoring of features and target.
///
/// Statistics are population mean and standard deviation over the windows
/// the scaler was fitted on. Constant dimensions keep a unit divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
}

impl Standardizer {
    pub fn identity(d_in: usize) -> Self {
        Standardizer {
            feature_mean: vec![0.0; d_in],
            feature_scale: vec![1.0; d_in],
            target_mean: 0.0,
            target_scale: 1.0,
        }
    }

    /// Fits on a non-empty set of windows with equal feature lengths.
    pub fn fit(windows: &[WindowSample]) -> Self {
        assert!(!windows.is_empty(), "cannot fit a scaler on no windows");
        let d = windows[0].features.len();
        let n = windows.len() as f64;

        let mut mean = vec![0.0; d];
        for w in windows {
            for (m, v) in mean.iter_mut().zip(&w.features) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for w in windows {
            for ((s, v), m) in var.iter_mut().zip(&w.features).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(s, m)| unit_if_constant((s / n).sqrt(), *m))
            .collect();

        let target_mean = windows.iter().map(|w| w.target).sum::<f64>() / n;
        let target_var = windows
            .iter()
            .map(|w| (w.target - target_mean).powi(2))
            .sum::<f64>()
            / n;
        Standardizer {
            feature_mean: mean,
            feature_scale: scale,
            target_scale: unit_if_constant(target_var.sqrt(), target_mean),
            target_mean,
        }
    }

    pub fn transform_features(&self, features: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out
            .iter_mut()
            .zip(features)
            .zip(&self.feature_mean)
            .zip(&self.feature_scale)
        {
            *o = (v - m) / s;
        }
    }

    pub fn transform_target(&self, t: f64) -> f64 {
        (t - self.target_mean) / self.target_scale
    }

    pub fn inverse_target(&self, z: f64) -> f64 {
        z * self.target_scale + self.target_mean
    }
}

fn unit_if_constant(sd: f64, mean: f64) -> f64 {
    if sd <= 1e-12 * mean.abs().max(1.0) {
        1.0
    } else {
        sd
    }
}
