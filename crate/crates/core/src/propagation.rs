//! Log-normal shadowing, a quadratic RSSI-distance fit and the synthetic
//! dataset generator.
//!
//! # Random stream
//!
//! [`generate_dataset`] draws every reading from a single `ChaCha8Rng`
//! (`rand_chacha`) created with `seed_from_u64(seed)`. Shadowing terms are
//! `sigma * z` with `z` from `rand_distr::StandardNormal`, consumed in the
//! nested order RP (ascending id) -> instance -> reading -> AP (ascending id).
//! One normal variate is consumed per reading even when `sigma = 0`, so the
//! stream layout does not depend on the noise level. Readings are rounded
//! half away from zero to integer dBm.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{euclidean_distance_3d, Scenario};
use crate::representations::{LabeledSample, SampleMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub ref_distance_m: f64,
    pub rssi_at_ref: f64,
    pub path_loss_exponent: f64,
    pub shadowing_sigma: f64,
}

impl Default for LogNormalParams {
    fn default() -> Self {
        Self {
            ref_distance_m: 1.0,
            rssi_at_ref: -40.0,
            path_loss_exponent: 2.5,
            shadowing_sigma: 3.0,
        }
    }
}

impl LogNormalParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.ref_distance_m,
            self.rssi_at_ref,
            self.path_loss_exponent,
            self.shadowing_sigma,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NonFinite { what: "propagation parameters" });
        }
        if self.ref_distance_m <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "ref_distance_m must be positive, got {}",
                self.ref_distance_m
            )));
        }
        if self.shadowing_sigma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "shadowing_sigma must be non-negative, got {}",
                self.shadowing_sigma
            )));
        }
        Ok(())
    }

    pub fn with_sigma(self, shadowing_sigma: f64) -> Self {
        Self { shadowing_sigma, ..self }
    }
}

/// Deterministic part of the model: `rssi_at_ref - 10 eta log10(d / d0)`.
pub fn mean_rssi(distance: f64, params: &LogNormalParams) -> Result<f64> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(Error::NonPositiveDistance(distance));
    }
    Ok(params.rssi_at_ref - 10.0 * params.path_loss_exponent * (distance / params.ref_distance_m).log10())
}

/// Model value plus a shadowing term `noise_db` already drawn from N(0, sigma^2).
pub fn log_normal_rssi(distance: f64, params: &LogNormalParams, noise_db: f64) -> Result<f64> {
    Ok(mean_rssi(distance, params)? + noise_db)
}

/// `rssi(d) = a d^2 + b d + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_rms: f64,
}

impl QuadraticFit {
    pub fn eval(&self, d: f64) -> f64 {
        (self.a * d + self.b) * d + self.c
    }
}

/// RMS residual of an arbitrary quadratic over the calibration points.
pub fn quadratic_residual_rms(calibration: &[(f64, f64)], a: f64, b: f64, c: f64) -> f64 {
    let sse: f64 = calibration
        .iter()
        .map(|&(d, r)| (r - ((a * d + b) * d + c)).powi(2))
        .sum();
    (sse / calibration.len() as f64).sqrt()
}

/// Least-squares quadratic through `(distance_m, rssi_dbm)` pairs.
pub fn fit_quadratic(calibration: &[(f64, f64)]) -> Result<QuadraticFit> {
    if calibration.iter().any(|(d, r)| !d.is_finite() || !r.is_finite()) {
        return Err(Error::NonFinite { what: "calibration points" });
    }
    let mut distinct: Vec<f64> = calibration.iter().map(|(d, _)| *d).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 distinct distances, got {}",
            distinct.len()
        )));
    }

    let rows = calibration.len();
    let design = DMatrix::from_fn(rows, 3, |i, j| calibration[i].0.powi(2 - j as i32));
    let target = DVector::from_iterator(rows, calibration.iter().map(|(_, r)| *r));
    let svd = design.svd(true, true);
    let tol = svd.singular_values.max() * f64::EPSILON * rows as f64;
    if svd.rank(tol) < 3 {
        return Err(Error::DegenerateFit("design matrix is rank deficient".into()));
    }
    let coef = svd
        .solve(&target, tol)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    Ok(QuadraticFit {
        a,
        b,
        c,
        residual_rms: quadratic_residual_rms(calibration, a, b, c),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub scenario: Scenario,
    pub params: LogNormalParams,
    pub m: usize,
    pub instances_per_rp: usize,
    pub seed: u64,
}

impl GenerationSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.instances_per_rp == 0 {
            return Err(Error::InvalidConfig("instances_per_rp must be at least 1".into()));
        }
        Ok(())
    }
}

/// One `m x n_aps` sample per (RP, instance), RPs and instances in ascending order.
pub fn generate_dataset(spec: &GenerationSpec) -> Result<Vec<LabeledSample>> {
    spec.validate()?;
    let scenario = &spec.scenario;
    let ap_ids = scenario.ap_ids();

    // model values per (rp, ap); rejects coincident positions up front
    let mut model = Vec::with_capacity(scenario.reference_points().len());
    for rp in scenario.reference_points() {
        let row = scenario
            .access_points()
            .iter()
            .map(|ap| {
                let d = euclidean_distance_3d(&rp.position, &ap.position);
                if d == 0.0 {
                    Err(Error::CoincidentAp {
                        ap_id: ap.ap_id,
                        rp_id: rp.rp_id,
                    })
                } else {
                    mean_rssi(d, &spec.params)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        model.push((rp.rp_id, row));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = spec.params.shadowing_sigma;
    let mut out = Vec::with_capacity(model.len() * spec.instances_per_rp);
    for (rp_id, row) in &model {
        for instance in 0..spec.instances_per_rp {
            let mut readings = Vec::with_capacity(spec.m * row.len());
            for _ in 0..spec.m {
                for mu in row {
                    let z: f64 = rng.sample(StandardNormal);
                    readings.push((mu + sigma * z).round());
                }
            }
            out.push(LabeledSample {
                rp_id: *rp_id,
                instance_idx: instance as u32,
                matrix: SampleMatrix::from_row_major(spec.m, ap_ids.clone(), readings)?,
            });
        }
    }
    Ok(out)
}
