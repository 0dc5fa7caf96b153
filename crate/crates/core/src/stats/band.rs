use std::fmt;

use serde::{Deserialize, Serialize};

/// Qualitative strength of a correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationBand {
    Negligible,
    Low,
    Moderate,
    High,
}

/// High ≥ 0.70 > Moderate ≥ 0.50 > Low ≥ 0.30 > Negligible, on the signed value.
pub fn classify_band(rho: f64) -> CorrelationBand {
    if rho >= 0.70 {
        CorrelationBand::High
    } else if rho >= 0.50 {
        CorrelationBand::Moderate
    } else if rho >= 0.30 {
        CorrelationBand::Low
    } else {
        CorrelationBand::Negligible
    }
}

impl CorrelationBand {
    /// Moderate or better is usable for prediction.
    pub fn is_acceptable(self) -> bool {
        self >= CorrelationBand::Moderate
    }
}

impl fmt::Display for CorrelationBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationBand::Negligible => "negligible",
            CorrelationBand::Low => "low",
            CorrelationBand::Moderate => "moderate",
            CorrelationBand::High => "high",
        })
    }
}
