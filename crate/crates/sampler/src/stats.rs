use serde::{Deserialize, Serialize};

use crate::SamplerError;

/// Joint distribution of an ordered qubit pair `(A, B)`: `p10` is
/// `P(A = 1, B = 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl PairStats {
    pub fn new(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self, SamplerError> {
        let s = Self { p11, p10, p01, p00 };
        let all = [p11, p10, p01, p00];
        if all.iter().any(|p| !(0.0..=1.0).contains(p))
            || (all.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(SamplerError::InvalidArgument(format!(
                "pair probabilities {all:?} must lie in [0, 1] and sum to 1"
            )));
        }
        Ok(s)
    }

    pub fn from_counts(n11: u64, n10: u64, n01: u64, n00: u64) -> Self {
        let n = (n11 + n10 + n01 + n00) as f64;
        Self {
            p11: n11 as f64 / n,
            p10: n10 as f64 / n,
            p01: n01 as f64 / n,
            p00: n00 as f64 / n,
        }
    }

    /// Element-wise mean of several pairs.
    pub fn mean(stats: &[PairStats]) -> Self {
        let n = stats.len() as f64;
        let sum = |f: fn(&PairStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
        Self {
            p11: sum(|s| s.p11),
            p10: sum(|s| s.p10),
            p01: sum(|s| s.p01),
            p00: sum(|s| s.p00),
        }
    }
}

/// Log odds ratio `ln(p11 * p00 / (p01 * p10))`. Zero exactly when the pair
/// is independent; a zero cell yields [`SamplerError::Saturated`].
pub fn coupling_metric(stats: &PairStats) -> Result<f64, SamplerError> {
    let s = PairStats::new(stats.p11, stats.p10, stats.p01, stats.p00)?;
    if s.p11 == 0.0 || s.p10 == 0.0 || s.p01 == 0.0 || s.p00 == 0.0 {
        return Err(SamplerError::Saturated(s));
    }
    Ok(s.p11.ln() + s.p00.ln() - s.p01.ln() - s.p10.ln())
}
