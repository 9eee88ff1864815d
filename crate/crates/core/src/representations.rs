//! Raw sample matrices and the instance vectors built from them.
//!
//! A [`SampleMatrix`] holds `m` readings (rows) of `n` APs (columns). The
//! proposed methods turn it into `3n` attributes, `[Q1 Q2 Q3]` per AP in AP
//! order; the baselines start from per-AP means and then apply either the
//! Powed transform or a PCA projection.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geometry::{Coordinates3D, Scenario};
use crate::stats;
use crate::{Error, Result};

/// `m x n` RSSI readings in dBm, row-major. Column `j` belongs to `ap_ids[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    readings: Vec<f64>,
    rows: usize,
    ap_ids: Vec<u32>,
}

impl SampleMatrix {
    pub fn new(rows: Vec<Vec<f64>>, ap_ids: Vec<u32>) -> Result<Self> {
        let m = rows.len();
        let n = ap_ids.len();
        let mut readings = Vec::with_capacity(m * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} readings, expected {n}",
                    row.len()
                )));
            }
            readings.extend(row);
        }
        Self::from_row_major(m, ap_ids, readings)
    }

    pub fn from_row_major(rows: usize, ap_ids: Vec<u32>, readings: Vec<f64>) -> Result<Self> {
        if rows == 0 || ap_ids.is_empty() {
            return Err(Error::EmptySample);
        }
        if readings.len() != rows * ap_ids.len() {
            return Err(Error::LengthMismatch {
                expected: rows * ap_ids.len(),
                actual: readings.len(),
            });
        }
        if readings.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "sample matrix" });
        }
        let mut seen = ap_ids.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMatrix(format!("duplicate AP ids in {ap_ids:?}")));
        }
        Ok(Self {
            readings,
            rows,
            ap_ids,
        })
    }

    /// Number of readings per AP.
    pub fn m(&self) -> usize {
        self.rows
    }

    /// Number of APs.
    pub fn n(&self) -> usize {
        self.ap_ids.len()
    }

    pub fn ap_ids(&self) -> &[u32] {
        &self.ap_ids
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.readings[row * self.n() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.n();
        &self.readings[row * n..(row + 1) * n]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Re-orders/restricts the columns to `ap_ids`.
    pub fn select_aps(&self, ap_ids: &[u32]) -> Result<SampleMatrix> {
        let cols = ap_ids
            .iter()
            .map(|id| {
                self.ap_ids
                    .iter()
                    .position(|a| a == id)
                    .ok_or(Error::MissingAp(*id))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut readings = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            readings.extend(cols.iter().map(|&c| self.get(r, c)));
        }
        SampleMatrix::from_row_major(self.rows, ap_ids.to_vec(), readings)
    }
}

/// A raw capture at a known (or claimed) RP.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub rp_id: u32,
    pub instance_idx: u32,
    pub matrix: SampleMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationTag {
    Quartile,
    Mean,
    Powed,
    Pca,
}

impl RepresentationTag {
    /// Attributes contributed by each AP, or `None` when attributes do not
    /// map onto APs (PCA).
    pub fn attributes_per_ap(self) -> Option<usize> {
        match self {
            RepresentationTag::Quartile => Some(3),
            RepresentationTag::Mean | RepresentationTag::Powed => Some(1),
            RepresentationTag::Pca => None,
        }
    }
}

impl fmt::Display for RepresentationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepresentationTag::Quartile => "quartile",
            RepresentationTag::Mean => "mean",
            RepresentationTag::Powed => "powed",
            RepresentationTag::Pca => "pca",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintInstance {
    pub attributes: Vec<f64>,
    pub rp_label: Option<u32>,
    pub representation_tag: RepresentationTag,
}

pub fn build_quartile_instance(sample: &SampleMatrix, rp_label: Option<u32>) -> Result<FingerprintInstance> {
    let mut attributes = Vec::with_capacity(3 * sample.n());
    for j in 0..sample.n() {
        attributes.extend(stats::quartiles(&sample.column(j))?.as_array());
    }
    Ok(FingerprintInstance {
        attributes,
        rp_label,
        representation_tag: RepresentationTag::Quartile,
    })
}

pub fn build_mean_instance(sample: &SampleMatrix, rp_label: Option<u32>) -> Result<FingerprintInstance> {
    let attributes = (0..sample.n())
        .map(|j| stats::mean(&sample.column(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FingerprintInstance {
        attributes,
        rp_label,
        representation_tag: RepresentationTag::Mean,
    })
}

/// Parameters of the Powed transform `((x - floor)^beta) / ((-floor)^beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowedParams {
    pub floor_dbm: f64,
    pub beta: f64,
}

impl Default for PowedParams {
    fn default() -> Self {
        Self {
            floor_dbm: -100.0,
            beta: std::f64::consts::E,
        }
    }
}

impl PowedParams {
    pub fn validate(&self) -> Result<()> {
        if !self.floor_dbm.is_finite() || self.floor_dbm >= 0.0 {
            return Err(Error::InvalidPowed(format!(
                "floor_dbm must be negative, got {}",
                self.floor_dbm
            )));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::InvalidPowed(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Maps a mean instance onto `[0, 1]` (for readings at or below 0 dBm).
pub fn powed_transform(instance: &FingerprintInstance, params: PowedParams) -> Result<FingerprintInstance> {
    params.validate()?;
    expect_tag(instance, RepresentationTag::Mean)?;
    let denom = (-params.floor_dbm).powf(params.beta);
    let attributes = instance
        .attributes
        .iter()
        .enumerate()
        .map(|(index, &x)| {
            if x < params.floor_dbm {
                Err(Error::BelowFloor {
                    index,
                    value: x,
                    floor: params.floor_dbm,
                })
            } else {
                Ok((x - params.floor_dbm).powf(params.beta) / denom)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FingerprintInstance {
        attributes,
        rp_label: instance.rp_label,
        representation_tag: RepresentationTag::Powed,
    })
}

fn expect_tag(instance: &FingerprintInstance, tag: RepresentationTag) -> Result<()> {
    if instance.representation_tag != tag {
        return Err(Error::RepresentationMismatch {
            expected: tag.to_string(),
            actual: instance.representation_tag.to_string(),
        });
    }
    Ok(())
}

/// Principal axes of a set of mean instances.
///
/// `components[i]` is a unit row; rows are mutually orthogonal and ordered by
/// non-increasing `explained_variance`. Each row's largest-magnitude entry is
/// positive (first such entry on exact ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean_vector: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dimension(&self) -> usize {
        self.mean_vector.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }
}

pub fn pca_fit(training: &[FingerprintInstance], n_components: usize) -> Result<PcaModel> {
    if training.len() < 2 {
        return Err(Error::TooFewInstances(training.len()));
    }
    let dim = training[0].attributes.len();
    for inst in training {
        expect_tag(inst, RepresentationTag::Mean)?;
        if inst.attributes.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: inst.attributes.len(),
            });
        }
    }
    if n_components == 0 || dim < n_components {
        return Err(Error::TooFewAttributes {
            needed: n_components.max(1),
            actual: dim,
        });
    }

    let rows = training.len();
    let mut mean_vector = vec![0.0; dim];
    for inst in training {
        for (m, v) in mean_vector.iter_mut().zip(&inst.attributes) {
            *m += v;
        }
    }
    for m in &mut mean_vector {
        *m /= rows as f64;
    }

    let centered = DMatrix::from_fn(rows, dim, |i, j| training[i].attributes[j] - mean_vector[j]);
    let covariance = (centered.transpose() * &centered) / (rows as f64 - 1.0);
    let eigen = SymmetricEigen::new(covariance);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut components = Vec::with_capacity(n_components);
    let mut explained_variance = Vec::with_capacity(n_components);
    for &idx in order.iter().take(n_components) {
        let mut v: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for x in &mut v {
            *x *= sign / norm;
        }
        components.push(v);
        explained_variance.push(eigen.eigenvalues[idx].max(0.0));
    }

    Ok(PcaModel {
        mean_vector,
        components,
        explained_variance,
    })
}

pub fn pca_project(model: &PcaModel, instance: &FingerprintInstance) -> Result<FingerprintInstance> {
    expect_tag(instance, RepresentationTag::Mean)?;
    if instance.attributes.len() != model.dimension() {
        return Err(Error::LengthMismatch {
            expected: model.dimension(),
            actual: instance.attributes.len(),
        });
    }
    let attributes = model
        .components
        .iter()
        .map(|c| {
            c.iter()
                .zip(&instance.attributes)
                .zip(&model.mean_vector)
                .map(|((w, x), mu)| w * (x - mu))
                .sum()
        })
        .collect();
    Ok(FingerprintInstance {
        attributes,
        rp_label: instance.rp_label,
        representation_tag: RepresentationTag::Pca,
    })
}

/// How raw samples become instances when building a training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Representation {
    Quartile,
    Mean,
    Powed(PowedParams),
}

impl Representation {
    pub fn build(&self, sample: &SampleMatrix, rp_label: Option<u32>) -> Result<FingerprintInstance> {
        match self {
            Representation::Quartile => build_quartile_instance(sample, rp_label),
            Representation::Mean => build_mean_instance(sample, rp_label),
            Representation::Powed(p) => powed_transform(&build_mean_instance(sample, rp_label)?, *p),
        }
    }

    pub fn tag(&self) -> RepresentationTag {
        match self {
            Representation::Quartile => RepresentationTag::Quartile,
            Representation::Mean => RepresentationTag::Mean,
            Representation::Powed(_) => RepresentationTag::Powed,
        }
    }
}

/// Labeled, class-balanced instances with the coordinates of every class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSet {
    instances: Vec<FingerprintInstance>,
    class_index: BTreeMap<u32, Vec<usize>>,
    rp_coordinates: BTreeMap<u32, Coordinates3D>,
    ap_ids: Vec<u32>,
    representation_tag: RepresentationTag,
}

impl TrainingSet {
    /// Validates and indexes a set of instances. `ap_ids` is the AP order the
    /// attributes were built in.
    pub fn new(
        instances: Vec<FingerprintInstance>,
        rp_coordinates: BTreeMap<u32, Coordinates3D>,
        ap_ids: Vec<u32>,
    ) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyTrainingSet)?;
        let tag = first.representation_tag;
        let len = first.attributes.len();
        if let Some(per_ap) = tag.attributes_per_ap() {
            if len != per_ap * ap_ids.len() {
                return Err(Error::LengthMismatch {
                    expected: per_ap * ap_ids.len(),
                    actual: len,
                });
            }
        }

        let mut class_index: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, inst) in instances.iter().enumerate() {
            if inst.representation_tag != tag {
                return Err(Error::RepresentationMismatch {
                    expected: tag.to_string(),
                    actual: inst.representation_tag.to_string(),
                });
            }
            if inst.attributes.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    actual: inst.attributes.len(),
                });
            }
            if inst.attributes.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "training instance" });
            }
            let label = inst.rp_label.ok_or(Error::MissingLabel(i))?;
            if !rp_coordinates.contains_key(&label) {
                return Err(Error::UnknownRp(label));
            }
            class_index.entry(label).or_default().push(i);
        }

        check_balance(class_index.iter().map(|(rp, idx)| (*rp, idx.len())))?;

        Ok(Self {
            instances,
            class_index,
            rp_coordinates,
            ap_ids,
            representation_tag: tag,
        })
    }

    pub fn instances(&self) -> &[FingerprintInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn class_index(&self) -> &BTreeMap<u32, Vec<usize>> {
        &self.class_index
    }

    pub fn rp_coordinates(&self) -> &BTreeMap<u32, Coordinates3D> {
        &self.rp_coordinates
    }

    pub fn rp_position(&self, rp_id: u32) -> Option<Coordinates3D> {
        self.rp_coordinates.get(&rp_id).copied()
    }

    pub fn ap_ids(&self) -> &[u32] {
        &self.ap_ids
    }

    pub fn representation_tag(&self) -> RepresentationTag {
        self.representation_tag
    }

    pub fn attribute_count(&self) -> usize {
        self.instances[0].attributes.len()
    }

    /// Keeps only the first `n_aps` APs of every instance.
    pub fn truncate_aps(&self, n_aps: usize) -> Result<TrainingSet> {
        let per_ap = self.representation_tag.attributes_per_ap().ok_or_else(|| {
            Error::RepresentationMismatch {
                expected: "a per-AP representation".into(),
                actual: self.representation_tag.to_string(),
            }
        })?;
        if n_aps == 0 || n_aps > self.ap_ids.len() {
            return Err(Error::InvalidConfig(format!(
                "n_aps = {n_aps}, training set has {} APs",
                self.ap_ids.len()
            )));
        }
        let instances = self
            .instances
            .iter()
            .map(|inst| FingerprintInstance {
                attributes: inst.attributes[..per_ap * n_aps].to_vec(),
                rp_label: inst.rp_label,
                representation_tag: inst.representation_tag,
            })
            .collect();
        TrainingSet::new(instances, self.rp_coordinates.clone(), self.ap_ids[..n_aps].to_vec())
    }

    /// Applies `f` to every instance and re-validates the result.
    pub fn map_instances<F>(&self, f: F) -> Result<TrainingSet>
    where
        F: Fn(&FingerprintInstance) -> Result<FingerprintInstance>,
    {
        let instances = self.instances.iter().map(f).collect::<Result<Vec<_>>>()?;
        TrainingSet::new(instances, self.rp_coordinates.clone(), self.ap_ids.clone())
    }
}

fn check_balance(counts: impl Iterator<Item = (u32, usize)>) -> Result<()> {
    let counts: Vec<(u32, usize)> = counts.collect();
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, c) in &counts {
        *freq.entry(*c).or_default() += 1;
    }
    // the most common class size is taken as the intended one (larger wins ties)
    let expected = freq
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(size, _)| *size)
        .unwrap_or(0);
    match counts.iter().find(|(_, c)| *c != expected) {
        Some(&(rp_id, count)) => Err(Error::ClassImbalance {
            rp_id,
            count,
            expected,
        }),
        None => Ok(()),
    }
}

/// Builds a training set from labeled raw samples; coordinates come from the scenario.
pub fn build_training_set(
    samples: &[LabeledSample],
    scenario: &Scenario,
    representation: Representation,
) -> Result<TrainingSet> {
    let first = samples.first().ok_or(Error::EmptyTrainingSet)?;
    let ap_ids = first.matrix.ap_ids().to_vec();
    let mut rp_coordinates = BTreeMap::new();
    let mut instances = Vec::with_capacity(samples.len());
    for s in samples {
        let pos = scenario.rp_position(s.rp_id).ok_or(Error::UnknownRp(s.rp_id))?;
        rp_coordinates.insert(s.rp_id, pos);
        let matrix = if s.matrix.ap_ids() == ap_ids.as_slice() {
            s.matrix.clone()
        } else {
            s.matrix.select_aps(&ap_ids)?
        };
        instances.push(representation.build(&matrix, Some(s.rp_id))?);
    }
    TrainingSet::new(instances, rp_coordinates, ap_ids)
}
