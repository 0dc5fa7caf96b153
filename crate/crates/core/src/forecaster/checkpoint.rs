//! Model checkpoint files.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! {
//!   "format": "workload-forecast-checkpoint",
//!   "version": 1,
//!   "layer_dims": [d_in, 128, 128, 1],
//!   "activation": "relu",
//!   "seed": <u64>,
//!   "scaler": { "feature_mean": [...], "feature_scale": [...],
//!               "target_mean": <f64>, "target_scale": <f64> },
//!   "layers": [ { "weights": [row-major, n_out * n_in], "bias": [n_out] }, ... ]
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a checkpoint
//! back reproduces the model bit for bit.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Layer, MlpModel};
use super::scaler::Standardizer;
use super::{Forecaster, ModelError};

pub const CHECKPOINT_FORMAT: &str = "workload-forecast-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerDump {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDump {
    format: String,
    version: u32,
    layer_dims: Vec<usize>,
    activation: Activation,
    seed: u64,
    scaler: Standardizer,
    layers: Vec<LayerDump>,
}

fn to_dump(model: &Forecaster) -> CheckpointDump {
    CheckpointDump {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        layer_dims: model.net.layer_dims.clone(),
        activation: model.net.activation,
        seed: model.net.seed,
        scaler: model.scaler.clone(),
        layers: model
            .net
            .layers
            .iter()
            .map(|l| LayerDump {
                weights: l.weights.iter().copied().collect(),
                bias: l.bias.to_vec(),
            })
            .collect(),
    }
}

fn from_dump(dump: CheckpointDump) -> Result<Forecaster, ModelError> {
    let bad = |msg: String| Err(ModelError::Checkpoint(msg));
    if dump.format != CHECKPOINT_FORMAT {
        return bad(format!("unknown format `{}`", dump.format));
    }
    if dump.version != CHECKPOINT_VERSION {
        return bad(format!("unsupported version {}", dump.version));
    }
    if dump.layer_dims.len() < 2 || dump.layers.len() != dump.layer_dims.len() - 1 {
        return bad("layer count does not match layer_dims".into());
    }
    let d_in = dump.layer_dims[0];
    if dump.scaler.feature_mean.len() != d_in || dump.scaler.feature_scale.len() != d_in {
        return bad("scaler width does not match the input dimension".into());
    }
    let mut layers = Vec::with_capacity(dump.layers.len());
    for (w, l) in dump.layer_dims.windows(2).zip(dump.layers) {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = Array2::from_shape_vec((n_out, n_in), l.weights)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if l.bias.len() != n_out {
            return bad(format!("bias has {} entries, expected {n_out}", l.bias.len()));
        }
        layers.push(Layer {
            weights,
            bias: Array1::from(l.bias),
        });
    }
    Ok(Forecaster {
        net: MlpModel {
            layer_dims: dump.layer_dims,
            layers,
            activation: dump.activation,
            seed: dump.seed,
        },
        scaler: dump.scaler,
    })
}

pub fn write_checkpoint(model: &Forecaster, path: &Path) -> Result<(), ModelError> {
    let text = serde_json::to_string_pretty(&to_dump(model))
        .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    fs::write(path, text + "\n")
        .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn read_checkpoint(path: &Path) -> Result<Forecaster, ModelError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
    let dump: CheckpointDump =
        serde_json::from_str(&text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    from_dump(dump)
}
