//! Evaluation protocol: mean error, error CDF, the (n, k) treatment grid and
//! the readings-per-sample sweep.
//!
//! Timings cover query instance construction plus classification only; data
//! generation and loading are excluded.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{euclidean_distance_3d, Coordinates3D, Scenario};
use crate::locator::{Locator, Method, MethodConfig};
use crate::propagation::{generate_dataset, GenerationSpec, LogNormalParams};
use crate::representations::{build_training_set, LabeledSample, Representation, RepresentationTag, TrainingSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub rp_id: u32,
    pub instance_idx: u32,
    pub true_position: Coordinates3D,
    pub estimated_position: Coordinates3D,
    pub error_m: f64,
    pub elapsed_s: f64,
    pub config: MethodConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentResult {
    pub method: Method,
    pub n_aps: usize,
    pub k: usize,
    pub mean_error_m: f64,
    pub estimate_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Treatment {
    pub result: TreatmentResult,
    pub records: Vec<EstimateRecord>,
}

impl Treatment {
    pub fn mean_time_s(&self) -> f64 {
        mean_time(&self.records).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub threshold_m: f64,
    pub cumulative_fraction: f64,
}

/// Average localization error over the records, in meters.
pub fn mean_error(records: &[EstimateRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("estimate records"));
    }
    Ok(records.iter().map(|r| r.error_m).sum::<f64>() / records.len() as f64)
}

/// Average per-estimate compute time, in seconds.
pub fn mean_time(records: &[EstimateRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("estimate records"));
    }
    Ok(records.iter().map(|r| r.elapsed_s).sum::<f64>() / records.len() as f64)
}

/// Empirical CDF as one step per distinct error value, ascending.
pub fn error_cdf(errors: &[f64]) -> Result<Vec<CdfPoint>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("errors"));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite { what: "errors" });
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len();
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, &e) in sorted.iter().enumerate() {
        let is_last_of_run = i + 1 == total || sorted[i + 1] != e;
        if is_last_of_run {
            out.push(CdfPoint {
                threshold_m: e,
                cumulative_fraction: (i + 1) as f64 / total as f64,
            });
        }
    }
    Ok(out)
}

/// The n and k values to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
}

impl Default for GridSpec {
    /// n in 2..=8, odd k in 1..=13: 49 treatments.
    fn default() -> Self {
        Self {
            n_values: (2..=8).collect(),
            k_values: (1..=13).step_by(2).collect(),
        }
    }
}

impl GridSpec {
    /// The (n, k) pairs a method is evaluated on, in (n, k) order. 3PCA skips
    /// n below its component count.
    pub fn treatments(&self, template: &MethodConfig) -> Vec<(usize, usize)> {
        let min_n = match template.method {
            Method::ThreePca => template.pca_components,
            _ => 1,
        };
        self.n_values
            .iter()
            .filter(|&&n| n >= min_n)
            .flat_map(|&n| self.k_values.iter().map(move |&k| (n, k)))
            .collect()
    }
}

fn common_ap_order(train: &[LabeledSample], test: &[LabeledSample], scenario: &Scenario) -> Result<Vec<u32>> {
    let first = train
        .first()
        .ok_or(Error::IncompatibleDatasets("training dataset is empty".into()))?;
    if test.is_empty() {
        return Err(Error::IncompatibleDatasets("test dataset is empty".into()));
    }
    let order = first.matrix.ap_ids().to_vec();
    for (name, set) in [("training", train), ("test", test)] {
        if let Some(s) = set.iter().find(|s| s.matrix.ap_ids() != order.as_slice()) {
            return Err(Error::IncompatibleDatasets(format!(
                "{name} sample (rp {}, instance {}) has AP order {:?}, expected {:?}",
                s.rp_id,
                s.instance_idx,
                s.matrix.ap_ids(),
                order
            )));
        }
        if let Some(s) = set.iter().find(|s| scenario.rp_position(s.rp_id).is_none()) {
            return Err(Error::IncompatibleDatasets(format!(
                "{name} sample references rp {} which is not in the scenario",
                s.rp_id
            )));
        }
    }
    let scenario_aps: BTreeSet<u32> = scenario.ap_ids().into_iter().collect();
    if let Some(ap) = order.iter().find(|ap| !scenario_aps.contains(ap)) {
        return Err(Error::IncompatibleDatasets(format!("AP {ap} is not in the scenario")));
    }
    Ok(order)
}

/// Localizes every test sample with an already-built locator.
pub fn evaluate_locator(locator: &Locator, test: &[LabeledSample], scenario: &Scenario) -> Result<Treatment> {
    let config = locator.config().clone();
    let records = test
        .iter()
        .map(|s| {
            let truth = scenario.rp_position(s.rp_id).ok_or(Error::UnknownRp(s.rp_id))?;
            let start = Instant::now();
            let estimate = locator.localize(&s.matrix)?;
            let elapsed_s = start.elapsed().as_secs_f64();
            Ok(EstimateRecord {
                rp_id: s.rp_id,
                instance_idx: s.instance_idx,
                true_position: truth,
                estimated_position: estimate.coordinates,
                error_m: euclidean_distance_3d(&truth, &estimate.coordinates),
                elapsed_s,
                config: config.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = TreatmentResult {
        method: config.method,
        n_aps: config.n_aps,
        k: config.k,
        mean_error_m: mean_error(&records)?,
        estimate_count: records.len(),
    };
    Ok(Treatment { result, records })
}

fn base_training_set(train: &[LabeledSample], scenario: &Scenario, method: Method) -> Result<TrainingSet> {
    let representation = match method.training_representation() {
        RepresentationTag::Quartile => Representation::Quartile,
        _ => Representation::Mean,
    };
    build_training_set(train, scenario, representation)
}

/// Runs every (n, k) treatment of `grid` for the template's method.
///
/// Treatments run in parallel; results come back in (n, k) order.
pub fn treatment_grid(
    train: &[LabeledSample],
    test: &[LabeledSample],
    scenario: &Scenario,
    template: &MethodConfig,
    grid: &GridSpec,
) -> Result<Vec<Treatment>> {
    common_ap_order(train, test, scenario)?;
    let training = base_training_set(train, scenario, template.method)?;
    let pairs = grid.treatments(template);
    if pairs.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "grid has no treatments for method {}",
            template.method
        )));
    }
    pairs
        .par_iter()
        .map(|&(n, k)| {
            let locator = Locator::new(template.with_n_aps(n).with_k(k), &training)?;
            evaluate_locator(&locator, test, scenario)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub mean_error_m: f64,
    pub mean_time_s: f64,
}

/// Seed of the test dataset paired with a training `seed` in [`m_sweep`].
pub fn test_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Regenerates training (`seed`) and test ([`test_seed`]) datasets for each
/// `m` and evaluates the fixed configuration on them.
pub fn m_sweep(
    scenario: &Scenario,
    params: &LogNormalParams,
    m_values: &[usize],
    config: &MethodConfig,
    instances_per_rp: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if m_values.is_empty() {
        return Err(Error::EmptyInput("m values"));
    }
    m_values
        .iter()
        .map(|&m| {
            let spec = |seed| GenerationSpec {
                scenario: scenario.clone(),
                params: *params,
                m,
                instances_per_rp,
                seed,
            };
            let train = generate_dataset(&spec(seed))?;
            let test = generate_dataset(&spec(test_seed(seed)))?;
            let training = base_training_set(&train, scenario, config.method)?;
            let locator = Locator::new(config.clone(), &training)?;
            let t = evaluate_locator(&locator, &test, scenario)?;
            Ok(SweepRow {
                m,
                mean_error_m: t.result.mean_error_m,
                mean_time_s: t.mean_time_s(),
            })
        })
        .collect()
}

/// Mean error table, one row per n and one column per k.
pub fn summary_table(results: &[TreatmentResult]) -> String {
    let ns: BTreeSet<usize> = results.iter().map(|r| r.n_aps).collect();
    let ks: BTreeSet<usize> = results.iter().map(|r| r.k).collect();
    let mut out = String::new();
    let method = results.first().map(|r| r.method.to_string()).unwrap_or_default();
    let _ = write!(out, "{:>8}", format!("{method} n\\k"));
    for k in &ks {
        let _ = write!(out, " {k:>8}");
    }
    out.push('\n');
    for n in &ns {
        let _ = write!(out, "{n:>8}");
        for k in &ks {
            match results.iter().find(|r| r.n_aps == *n && r.k == *k) {
                Some(r) => {
                    let _ = write!(out, " {:>8.4}", r.mean_error_m);
                }
                None => {
                    let _ = write!(out, " {:>8}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
