use serde::{Deserialize, Serialize};

use super::rank::average_ranks;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub n: usize,
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<SpearmanResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatsError::TooFewObservations {
            needed: 2,
            got: a.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    // mean rank is (n + 1) / 2 regardless of ties
    let mid = (n + 1.0) / 2.0;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mid, y - mid);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let rho = (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0);
    Ok(SpearmanResult { rho, n: a.len() })
}
