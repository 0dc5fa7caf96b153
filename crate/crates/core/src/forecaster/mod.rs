//! Autoregressive feed-forward forecaster.
//!
//! A [`Forecaster`] pairs an [`MlpModel`] with the [`Standardizer`] fitted on
//! its training windows. Networks are trained with Adam on mean squared error
//! and early-stopped on a temporal validation tail.

mod adam;
mod checkpoint;
mod mlp;
mod scaler;
mod train;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::SubjectSeries;
use crate::window::{build_windows, ForecastMode, HorizonConfig, WindowError, WindowSample};

pub use adam::{adam_step, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use mlp::{
    init_mlp, init_mlp_with_hidden, zeros_like, Activation, Layer, MlpModel, Params, HIDDEN_WIDTH,
};
pub use scaler::Standardizer;
pub use train::{temporal_split, train_early_stopping, TrainReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Window(#[from] WindowError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 128,
            max_epochs: 500,
            patience: 10,
            val_fraction: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidConfig(msg.to_string()));
        if !(self.val_fraction > 0.0 && self.val_fraction < 0.5) {
            return bad("val_fraction must lie in (0, 0.5)");
        }
        if self.patience < 1 || self.batch_size < 1 || self.max_epochs < 1 {
            return bad("patience, batch_size and max_epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.adam_eps > 0.0) {
            return bad("learning_rate and adam_eps must be positive");
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2)) {
            return bad("adam betas must lie in [0, 1)");
        }
        Ok(())
    }
}

/// A trained network together with its input/target standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    pub net: MlpModel,
    pub scaler: Standardizer,
}

/// One evaluated window of a held-out block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPrediction {
    pub target_time_s: f64,
    pub prediction: f64,
    pub truth: f64,
}

impl Forecaster {
    /// De-standardized prediction for one raw feature vector.
    pub fn predict(&self, features: &[f64]) -> Result<f64, ModelError> {
        let mut z = vec![0.0; features.len()];
        if features.len() != self.scaler.feature_mean.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.scaler.feature_mean.len(),
                got: features.len(),
            });
        }
        self.scaler.transform_features(features, &mut z);
        Ok(self.scaler.inverse_target(self.net.forward(&z)?))
    }

    /// Predictions for a batch of windows, in input order.
    pub fn predict_windows(&self, windows: &[WindowSample]) -> Result<Vec<f64>, ModelError> {
        let d = self.net.d_in();
        let mut x = ndarray::Array2::zeros((windows.len(), d));
        for (mut row, w) in x.outer_iter_mut().zip(windows) {
            if w.features.len() != d {
                return Err(ModelError::DimensionMismatch {
                    expected: d,
                    got: w.features.len(),
                });
            }
            self.scaler
                .transform_features(&w.features, row.as_slice_mut().expect("standard layout"));
        }
        let z = self.net.forward_batch(x.view())?;
        Ok(z.iter().map(|&v| self.scaler.inverse_target(v)).collect())
    }
}

/// Predicts every window that fits inside `block` of a held-out series.
pub fn predict_block(
    model: &Forecaster,
    s: &SubjectSeries,
    cfg: &HorizonConfig,
    mode: &ForecastMode,
    block: Range<usize>,
) -> Result<Vec<BlockPrediction>, ModelError> {
    let windows = build_windows(s, cfg, mode, Some(block))?;
    let preds = model.predict_windows(&windows)?;
    Ok(windows
        .iter()
        .zip(preds)
        .map(|(w, prediction)| BlockPrediction {
            target_time_s: s.time_at(w.target_index),
            prediction,
            truth: w.target,
        })
        .collect())
}
