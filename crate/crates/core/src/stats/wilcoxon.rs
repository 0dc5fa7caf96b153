use serde::{Deserialize, Serialize};

use super::gamma::normal_upper_tail;
use super::rank::{average_ranks, tie_groups};
use super::{mean_sd, StatsError};

/// Largest number of non-zero differences for which the exact null
/// distribution is used by default.
pub const EXACT_MAX_PAIRS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// min(T+, T−).
    pub w_statistic: f64,
    pub n_effective: usize,
    pub p: f64,
    pub method: PValueMethod,
    /// mean(d) / sd(d) over the non-zero differences; `None` when the sample
    /// deviation is zero or fewer than two differences remain.
    pub cohens_d: Option<f64>,
}

/// Two-sided Wilcoxon signed-rank test on the pairs `(a[i], b[i])`.
///
/// Zero differences are dropped. The p-value is exact for up to
/// [`EXACT_MAX_PAIRS`] remaining pairs, otherwise normal-approximated with
/// continuity and tie correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_signed_rank_with(a, b, None)
}

/// As [`wilcoxon_signed_rank`], optionally forcing the p-value method.
pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    method: Option<PValueMethod>,
) -> Result<WilcoxonResult, StatsError> {
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
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(StatsError::AllZeroDifferences);
    }

    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let t_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        // fold from +0.0: an empty f64 sum is -0.0
        .fold(0.0, |acc, (_, r)| acc + r);
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = t_plus.min(total - t_plus);

    let method = method.unwrap_or(if n <= EXACT_MAX_PAIRS {
        PValueMethod::Exact
    } else {
        PValueMethod::NormalApprox
    });
    let p = match method {
        PValueMethod::Exact => exact_p(&ranks, w),
        PValueMethod::NormalApprox => normal_p(&magnitudes, n, t_plus),
    };

    let (mean, sd) = mean_sd(&diffs);
    let cohens_d = (n >= 2 && sd > 0.0).then(|| mean / sd);

    Ok(WilcoxonResult {
        w_statistic: w,
        n_effective: n,
        p,
        method,
        cohens_d,
    })
}

/// P(min(T+, T−) <= w) under the sign-flip null, counted exactly.
///
/// Average ranks are multiples of 1/2, so doubled ranks are integers and the
/// distribution of T+ over all 2^n sign assignments is a subset-sum count
/// (exact in f64 up to 2^53 assignments).
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let w2 = (2.0 * w).round() as usize;

    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let hits: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| *s <= w2 || *s + w2 >= total)
        .map(|(_, c)| c)
        .sum();
    (hits / 2f64.powi(ranks.len() as i32)).min(1.0)
}

fn normal_p(magnitudes: &[f64], n: usize, t_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let ties: f64 = tie_groups(magnitudes)
        .into_iter()
        .map(|t| (t * t * t - t) as f64)
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((t_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * normal_upper_tail(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        assert_eq!(
            wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::AllZeroDifferences)
        );
    }

    #[test]
    fn all_positive_five() {
        let r = wilcoxon_signed_rank(&[2.0, 3.0, 4.0, 5.0, 6.0], &[1.0; 5]).unwrap();
        assert_eq!(r.w_statistic, 0.0);
        let r = wilcoxon_signed_rank(&[1.0; 5], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!(r.w_statistic == 0.0 && r.w_statistic.is_sign_positive());
        assert_eq!(r.method, PValueMethod::Exact);
        assert_eq!(r.p, 0.0625);
    }

    #[test]
    fn effect_size() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 7.0], &[0.0, 0.0, 0.0, 7.0]).unwrap();
        assert_eq!(r.n_effective, 3);
        assert_eq!(r.cohens_d, Some(2.0));
        let r = wilcoxon_signed_rank(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.cohens_d, None);
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..45).map(|i| i as f64 * 0.1 + 0.05 * (i % 3) as f64).collect();
        let b: Vec<f64> = (0..45).map(|i| i as f64 * 0.1).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, PValueMethod::NormalApprox);
        assert_eq!(r.n_effective, 30);
        let exact = wilcoxon_signed_rank_with(&a, &b, Some(PValueMethod::Exact)).unwrap();
        assert!(r.p > 0.0 && r.p < 1e-3);
        assert!((r.p - exact.p).abs() < 1e-3);
    }

    /// Every attainable W for untied samples of size n, as (a, b) pairs.
    fn all_outcomes(n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0u32..1 << n)
            .map(|mask| {
                let a = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { (i + 1) as f64 } else { -((i + 1) as f64) })
                    .collect();
                (a, vec![0.0; n])
            })
            .collect()
    }

    #[test]
    fn normal_approximation_tracks_exact_for_moderate_n() {
        for n in 2..=12 {
            let worst = all_outcomes(n)
                .iter()
                .map(|(a, b)| {
                    let e = wilcoxon_signed_rank_with(a, b, Some(PValueMethod::Exact)).unwrap();
                    let z = wilcoxon_signed_rank_with(a, b, Some(PValueMethod::NormalApprox)).unwrap();
                    (e.p - z.p).abs()
                })
                .fold(0.0, f64::max);
            // with 2 or 3 pairs the null has 4 or 8 atoms and no smooth
            // approximation can be within 0.05
            if n >= 4 {
                assert!(worst < 0.05, "n {n}: {worst}");
            } else {
                assert!(worst > 0.05, "n {n}: {worst}");
            }
        }
    }
}
