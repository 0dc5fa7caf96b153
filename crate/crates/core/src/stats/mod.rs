//! Evaluation statistics: Spearman correlation, the Friedman test with
//! Kendall's W, the Wilcoxon signed-rank test with paired Cohen's d,
//! correlation banding, and the chi-square upper tail they rely on.

mod band;
mod friedman;
mod gamma;
mod rank;
mod spearman;
mod wilcoxon;

use thiserror::Error;

pub use band::{classify_band, CorrelationBand};
pub use friedman::{format_friedman, friedman_test, FriedmanResult};
pub use gamma::{chi_square_upper_tail, ln_gamma, normal_upper_tail, regularized_gamma_q};
pub use rank::average_ranks;
pub use spearman::{spearman_rho, SpearmanResult};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_with, PValueMethod, WilcoxonResult,
    EXACT_MAX_PAIRS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("input is constant; rank correlation is undefined")]
    ConstantInput,
    #[error("score matrix is incomplete: {0}")]
    IncompleteMatrix(String),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("non-finite input value")]
    NonFinite,
}

/// Sample mean and standard deviation (n − 1); the deviation is 0 for n < 2.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}
