//! Order statistics over short RSSI samples.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// First, second and third quartile of a sample, in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileTriple {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl QuartileTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.q1, self.q2, self.q3]
    }
}

/// A quantile rule: maps an ascending, non-empty slice and a probability to a value.
pub type QuantileRule = fn(&[f64], f64) -> f64;

/// Quantile at probability `p` of an ascending sample using the rank
/// `r = p * (m + 1)`, clamped to `[1, m]`, with linear interpolation between
/// neighbouring order statistics.
pub fn rank_interpolated(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    debug_assert!(m > 0);
    let rank = (p * (m as f64 + 1.0)).clamp(1.0, m as f64);
    let lo = rank.floor() as usize; // 1-based
    let frac = rank - lo as f64;
    let below = sorted[lo - 1];
    if lo == m || frac == 0.0 {
        below
    } else {
        below + frac * (sorted[lo] - below)
    }
}

fn validate(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "RSSI sample" });
    }
    Ok(())
}

/// Quartiles under [`rank_interpolated`].
pub fn quartiles(sample: &[f64]) -> Result<QuartileTriple> {
    quartiles_with(sample, rank_interpolated)
}

pub fn quartiles_with(sample: &[f64], rule: QuantileRule) -> Result<QuartileTriple> {
    validate(sample)?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(QuartileTriple {
        q1: rule(&sorted, 0.25),
        q2: rule(&sorted, 0.50),
        q3: rule(&sorted, 0.75),
    })
}

pub fn mean(sample: &[f64]) -> Result<f64> {
    validate(sample)?;
    Ok(sample.iter().sum::<f64>() / sample.len() as f64)
}
