use serde::{Deserialize, Serialize};

use super::gamma::chi_square_upper_tail;
use super::rank::{average_ranks, tie_groups};
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: usize,
    pub n_subjects: usize,
    pub p: f64,
    pub kendalls_w: f64,
}

/// Friedman test over an `n_subjects x k` matrix (rows are subjects,
/// columns the repeated conditions), with tie correction.
///
/// A matrix whose rows are all fully tied yields chi2 = 0, W = 0, p = 1.
pub fn friedman_test(scores: &[Vec<f64>]) -> Result<FriedmanResult, StatsError> {
    let n = scores.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: n });
    }
    let k = scores[0].len();
    if k < 3 {
        return Err(StatsError::IncompleteMatrix(format!(
            "need at least 3 conditions, got {k}"
        )));
    }
    if let Some(i) = scores.iter().position(|r| r.len() != k) {
        return Err(StatsError::IncompleteMatrix(format!(
            "row {i} has {} entries, expected {k}",
            scores[i].len()
        )));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::IncompleteMatrix("non-finite score".into()));
    }

    let mut rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in scores {
        for (s, r) in rank_sums.iter_mut().zip(average_ranks(row)) {
            *s += r;
        }
        tie_term += tie_groups(row)
            .into_iter()
            .map(|t| (t * t * t - t) as f64)
            .sum::<f64>();
    }

    let (nf, kf) = (n as f64, k as f64);
    let correction = 1.0 - tie_term / (nf * (kf * kf * kf - kf));
    let df = k - 1;
    if correction <= 0.0 {
        return Ok(FriedmanResult {
            chi2: 0.0,
            df,
            n_subjects: n,
            p: 1.0,
            kendalls_w: 0.0,
        });
    }
    let sum_sq: f64 = rank_sums.iter().map(|r| r * r).sum();
    // kept in this order so integer-valued inputs stay exact
    let raw = 12.0 * sum_sq / (nf * kf * (kf + 1.0)) - 3.0 * nf * (kf + 1.0);
    let chi2 = (raw / correction).max(0.0);
    Ok(FriedmanResult {
        chi2,
        df,
        n_subjects: n,
        p: chi_square_upper_tail(chi2, df as u32),
        kendalls_w: (chi2 / (nf * (kf - 1.0))).clamp(0.0, 1.0),
    })
}

/// `χ²(df, N) = 39.17, p < 0.001, W = 0.49`.
pub fn format_friedman(r: &FriedmanResult) -> String {
    format!(
        "χ²({}, {}) = {:.2}, {}, W = {:.2}",
        r.df,
        r.n_subjects,
        r.chi2,
        format_p(r.p),
        r.kendalls_w
    )
}

pub(crate) fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p < 0.001".to_string()
    } else {
        format!("p = {p:.3}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_ordered_rows() {
        let scores: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![0.1 * i as f64, 0.2 + i as f64, 50.0, 90.0 + i as f64])
            .collect();
        let r = friedman_test(&scores).unwrap();
        assert_eq!(r.chi2, 30.0);
        assert_eq!(r.kendalls_w, 1.0);
        assert_eq!(r.df, 3);
        assert!(r.p < 1e-5);
    }

    #[test]
    fn fully_tied() {
        let r = friedman_test(&vec![vec![0.5; 4]; 6]).unwrap();
        assert_eq!((r.chi2, r.kendalls_w, r.p), (0.0, 0.0, 1.0));
    }

    #[test]
    fn tie_corrected_statistic() {
        // hand-computed: rank sums [4.5, 7.5, 6], Σ(t³−t) = 6
        let scores = vec![
            vec![1.0, 2.0, 3.0],
            vec![1.0, 3.0, 2.0],
            vec![2.0, 2.0, 1.0],
        ];
        let r = friedman_test(&scores).unwrap();
        let raw: f64 = 12.0 * (20.25 + 56.25 + 36.0) / 36.0 - 36.0;
        let expected = raw / (1.0 - 6.0 / 72.0);
        assert!((r.chi2 - expected).abs() < 1e-12);
        assert!((r.kendalls_w - expected / 6.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_matrices() {
        assert!(matches!(
            friedman_test(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0]]),
            Err(StatsError::IncompleteMatrix(_))
        ));
        assert!(matches!(
            friedman_test(&[vec![1.0, 2.0], vec![1.0, 2.0]]),
            Err(StatsError::IncompleteMatrix(_))
        ));
        assert!(matches!(
            friedman_test(&[vec![1.0, 2.0, 3.0]]),
            Err(StatsError::TooFewObservations { .. })
        ));
    }

    #[test]
    fn report_format() {
        let r = FriedmanResult {
            chi2: 39.17,
            df: 3,
            n_subjects: 21,
            p: 2e-8,
            kendalls_w: 39.17 / 63.0,
        };
        assert_eq!(format_friedman(&r), "χ²(3, 21) = 39.17, p < 0.001, W = 0.62");
        let r = FriedmanResult {
            p: 0.0437,
            kendalls_w: 0.49,
            ..r
        };
        assert_eq!(format_friedman(&r), "χ²(3, 21) = 39.17, p = 0.044, W = 0.49");
    }
}
