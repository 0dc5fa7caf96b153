use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::mlp::init_mlp;
use super::scaler::Standardizer;
use super::{Forecaster, ModelError, TrainConfig};
use crate::seed::mix64;
use crate::window::WindowSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub train_loss_curve: Vec<f64>,
    pub val_loss_curve: Vec<f64>,
    pub stopped_early: bool,
}

/// Splits windows into (train, validation) index sets: the temporal tail of
/// each subject's windows is held out for validation.
pub fn temporal_split(windows: &[WindowSample], val_fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, w) in windows.iter().enumerate() {
        by_subject.entry(&w.subject_id).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for idx in by_subject.values_mut() {
        idx.sort_by_key(|&i| (windows[i].target_index, i));
        let n_val = ((idx.len() as f64 * val_fraction).ceil() as usize).min(idx.len());
        let cut = idx.len() - n_val;
        train.extend_from_slice(&idx[..cut]);
        val.extend_from_slice(&idx[cut..]);
    }
    (train, val)
}

fn standardized(
    windows: &[WindowSample],
    idx: &[usize],
    scaler: &Standardizer,
    d_in: usize,
) -> (Array2<f64>, Array1<f64>) {
    let mut x = Array2::zeros((idx.len(), d_in));
    let mut y = Array1::zeros(idx.len());
    for (r, &i) in idx.iter().enumerate() {
        let w = &windows[i];
        scaler.transform_features(
            &w.features,
            x.row_mut(r).as_slice_mut().expect("standard layout"),
        );
        y[r] = scaler.transform_target(w.target);
    }
    (x, y)
}

/// Trains the forecaster with Adam on mini-batches and early stopping.
///
/// Features and targets are standardized with statistics fitted on the
/// supplied windows. The returned model carries the parameters of the epoch
/// with the lowest validation loss.
pub fn train_early_stopping(
    windows: &[WindowSample],
    cfg: &TrainConfig,
    d_in: usize,
) -> Result<(Forecaster, TrainReport), ModelError> {
    cfg.validate()?;
    if let Some(w) = windows.iter().find(|w| w.features.len() != d_in) {
        return Err(ModelError::DimensionMismatch {
            expected: d_in,
            got: w.features.len(),
        });
    }
    let (train_idx, val_idx) = temporal_split(windows, cfg.val_fraction);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(ModelError::InsufficientData(format!(
            "{} windows leave {} for training and {} for validation",
            windows.len(),
            train_idx.len(),
            val_idx.len()
        )));
    }

    let scaler = Standardizer::fit(windows);
    let (x_train, y_train) = standardized(windows, &train_idx, &scaler, d_in);
    let (x_val, y_val) = standardized(windows, &val_idx, &scaler, d_in);

    let mut net = init_mlp(d_in, cfg.seed);
    let mut best = net.layers.clone();
    let mut adam = AdamState::new(&net.layers);
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed ^ 0x0053_4855_4646_4c45));

    let val_loss = |net: &super::MlpModel| -> Result<f64, ModelError> {
        let pred = net.forward_batch(x_val.view())?;
        let r = &pred - &y_val;
        Ok(r.dot(&r) / r.len() as f64)
    };

    let mut report = TrainReport {
        epochs_run: 0,
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        train_loss_curve: Vec::new(),
        val_loss_curve: Vec::new(),
        stopped_early: false,
    };
    let mut order: Vec<usize> = (0..train_idx.len()).collect();
    let mut since_best = 0;
    let mut step = 0u64;
    let mut xb = Array2::zeros((cfg.batch_size, d_in));
    let mut yb = Array1::zeros(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let b = chunk.len();
            if b != xb.nrows() {
                xb = Array2::zeros((b, d_in));
                yb = Array1::zeros(b);
            }
            for (r, &i) in chunk.iter().enumerate() {
                xb.row_mut(r).assign(&x_train.row(i));
                yb[r] = y_train[i];
            }
            let (loss, grads) = net.loss_and_gradients_matrix(xb.view(), yb.view())?;
            step += 1;
            adam_step(&mut net.layers, &grads, &mut adam, step, cfg);
            epoch_loss += loss * b as f64;
        }
        report.train_loss_curve.push(epoch_loss / order.len() as f64);

        let vl = val_loss(&net)?;
        if !vl.is_finite() {
            return Err(ModelError::Diverged { epoch });
        }
        report.val_loss_curve.push(vl);
        report.epochs_run = epoch;
        if vl < report.best_val_loss {
            report.best_val_loss = vl;
            report.best_epoch = epoch;
            best.clone_from(&net.layers);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                report.stopped_early = true;
                break;
            }
        }
    }

    net.layers = best;
    Ok((Forecaster { net, scaler }, report))
}
