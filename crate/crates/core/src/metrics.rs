//! Similarity functions between attribute vectors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Sorensen,
}

impl Metric {
    pub fn distance(self, u: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            Metric::Euclidean => euclidean(u, v),
            Metric::Sorensen => sorensen(u, v),
        }
    }
}

fn same_len(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(())
}

pub fn euclidean(u: &[f64], v: &[f64]) -> Result<f64> {
    same_len(u, v)?;
    Ok(u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Sørensen (Bray-Curtis) dissimilarity `sum|u - v| / sum(u + v)` over
/// non-negative vectors.
pub fn sorensen(u: &[f64], v: &[f64]) -> Result<f64> {
    same_len(u, v)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (index, (&a, &b)) in u.iter().zip(v).enumerate() {
        for value in [a, b] {
            if value < 0.0 || value.is_nan() {
                return Err(Error::NegativeEntry { index, value });
            }
        }
        num += (a - b).abs();
        den += a + b;
    }
    if den <= 0.0 {
        return Err(Error::ZeroSum);
    }
    Ok(num / den)
}
