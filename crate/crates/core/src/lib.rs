//! Lag-horizon forecasting of operator workload from multichannel series.
//!
//! Series are cut into direct-forecast windows, a small MLP is trained per
//! leave-one-subject-out task, and out-of-sample Spearman correlations are
//! compared across lag horizons with Friedman and Wilcoxon tests.

pub mod data;
pub mod experiment;
pub mod forecaster;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod window;
