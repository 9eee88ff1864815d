//! kNN classification and the four position estimators.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Coordinates3D;
use crate::metrics::Metric;
use crate::representations::{
    build_mean_instance, build_quartile_instance, pca_fit, pca_project, powed_transform, FingerprintInstance,
    PcaModel, PowedParams, RepresentationTag, SampleMatrix, TrainingSet,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Quartiles, Euclidean kNN, majority RP.
    #[serde(rename = "I")]
    I,
    /// Quartiles, Euclidean kNN, frequency-weighted RP centroid.
    #[serde(rename = "II")]
    II,
    /// Per-AP means through the Powed transform, Sørensen kNN, majority RP.
    #[serde(rename = "PS")]
    PS,
    /// Per-AP means projected on 3 principal components, Euclidean kNN, centroid.
    #[serde(rename = "3PCA")]
    ThreePca,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::I, Method::II, Method::PS, Method::ThreePca];

    pub fn metric(self) -> Metric {
        match self {
            Method::PS => Metric::Sorensen,
            _ => Metric::Euclidean,
        }
    }

    /// Representation the training set must be built in before the method's own transform.
    pub fn training_representation(self) -> RepresentationTag {
        match self {
            Method::I | Method::II => RepresentationTag::Quartile,
            Method::PS | Method::ThreePca => RepresentationTag::Mean,
        }
    }

    pub fn uses_centroid(self) -> bool {
        matches!(self, Method::II | Method::ThreePca)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::I => "I",
            Method::II => "II",
            Method::PS => "PS",
            Method::ThreePca => "3PCA",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Method::I),
            "II" | "2" => Ok(Method::II),
            "PS" => Ok(Method::PS),
            "3PCA" | "3-PCA" | "PCA" => Ok(Method::ThreePca),
            _ => Err(Error::InvalidConfig(format!(
                "unknown method {s:?} (expected I, II, PS or 3PCA)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub k: usize,
    pub n_aps: usize,
    #[serde(default)]
    pub powed: PowedParams,
    #[serde(default = "default_pca_components")]
    pub pca_components: usize,
}

fn default_pca_components() -> usize {
    3
}

impl MethodConfig {
    pub fn new(method: Method, k: usize, n_aps: usize) -> Self {
        Self {
            method,
            k,
            n_aps,
            powed: PowedParams::default(),
            pca_components: default_pca_components(),
        }
    }

    pub fn with_k(&self, k: usize) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn with_n_aps(&self, n_aps: usize) -> Self {
        Self { n_aps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.n_aps == 0 {
            return Err(Error::InvalidConfig("n_aps must be at least 1".into()));
        }
        match self.method {
            Method::PS => self.powed.validate()?,
            Method::ThreePca => {
                if self.pca_components == 0 {
                    return Err(Error::InvalidConfig("pca_components must be at least 1".into()));
                }
                if self.n_aps < self.pca_components {
                    return Err(Error::TooFewAttributes {
                        needed: self.pca_components,
                        actual: self.n_aps,
                    });
                }
            }
            Method::I | Method::II => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub training_index: usize,
    pub distance: f64,
    pub rp_label: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub coordinates: Coordinates3D,
    /// The majority RP for methods I and PS; `None` for centroid methods.
    pub rp_id: Option<u32>,
    pub method: MethodConfig,
    pub neighbors: Vec<Neighbor>,
    pub tie_broken: bool,
}

/// The `k` training instances closest to `query`, ascending by distance and
/// then by training index.
pub fn k_nearest(training: &TrainingSet, query: &FingerprintInstance, k: usize, metric: Metric) -> Result<Vec<Neighbor>> {
    if query.representation_tag != training.representation_tag() {
        return Err(Error::RepresentationMismatch {
            expected: training.representation_tag().to_string(),
            actual: query.representation_tag.to_string(),
        });
    }
    if query.attributes.len() != training.attribute_count() {
        return Err(Error::LengthMismatch {
            expected: training.attribute_count(),
            actual: query.attributes.len(),
        });
    }
    if k == 0 || k > training.len() {
        return Err(Error::InvalidK { k, size: training.len() });
    }

    let mut all = training
        .instances()
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            Ok(Neighbor {
                training_index: i,
                distance: metric.distance(&query.attributes, &inst.attributes)?,
                // labels are guaranteed by TrainingSet
                rp_label: inst.rp_label.expect("training instances are labeled"),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let order = |a: &Neighbor, b: &Neighbor| -> Ordering {
        a.distance
            .total_cmp(&b.distance)
            .then(a.training_index.cmp(&b.training_index))
    };
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, order);
        all.truncate(k);
    }
    all.sort_by(order);
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorityVote {
    pub rp_id: u32,
    pub coordinates: Coordinates3D,
    pub tie_broken: bool,
}

/// Occurrence count per RP, in order of first appearance among `neighbors`.
fn rp_counts(neighbors: &[Neighbor]) -> Vec<(u32, usize)> {
    let mut counts: Vec<(u32, usize)> = Vec::new();
    for n in neighbors {
        match counts.iter_mut().find(|(rp, _)| *rp == n.rp_label) {
            Some((_, c)) => *c += 1,
            None => counts.push((n.rp_label, 1)),
        }
    }
    counts
}

fn coordinates_of(training: &TrainingSet, rp_id: u32) -> Result<Coordinates3D> {
    training.rp_position(rp_id).ok_or(Error::UnknownRp(rp_id))
}

/// The most frequent RP among the neighbors.
///
/// On a frequency tie the winner is the tied RP whose closest member is
/// nearest to the query. `neighbors` must be sorted ascending (as returned by
/// [`k_nearest`]), so that is the tied RP appearing first.
pub fn majority_rp(neighbors: &[Neighbor], training: &TrainingSet) -> Result<MajorityVote> {
    if neighbors.is_empty() {
        return Err(Error::EmptyInput("neighbors"));
    }
    let counts = rp_counts(neighbors);
    let best = counts.iter().map(|(_, c)| *c).max().unwrap_or(0);
    let mut tied = counts.iter().filter(|(_, c)| *c == best);
    let (rp_id, _) = *tied.next().expect("at least one RP has the max count");
    let tie_broken = tied.next().is_some();
    Ok(MajorityVote {
        rp_id,
        coordinates: coordinates_of(training, rp_id)?,
        tie_broken,
    })
}

/// Mean of the neighbors' RP coordinates, each RP weighted by how often it occurs.
pub fn weighted_centroid(neighbors: &[Neighbor], training: &TrainingSet) -> Result<Coordinates3D> {
    if neighbors.is_empty() {
        return Err(Error::EmptyInput("neighbors"));
    }
    let (mut sx, mut sy, mut sz, mut sw) = (0.0, 0.0, 0.0, 0.0);
    for (rp, count) in rp_counts(neighbors) {
        let p = coordinates_of(training, rp)?;
        let w = count as f64;
        sx += w * p.x;
        sy += w * p.y;
        sz += w * p.z;
        sw += w;
    }
    Ok(Coordinates3D::new(sx / sw, sy / sw, sz / sw))
}

/// A method configuration bound to a training set.
///
/// Construction truncates the training set to the configured APs and applies
/// the method's transform once (Powed, or PCA fit and projection), so repeated
/// queries all see the same model. Read-only afterwards and `Sync`.
#[derive(Debug, Clone)]
pub struct Locator {
    config: MethodConfig,
    training: TrainingSet,
    pca: Option<PcaModel>,
}

impl Locator {
    pub fn new(config: MethodConfig, training: &TrainingSet) -> Result<Self> {
        config.validate()?;
        let expected = config.method.training_representation();
        if training.representation_tag() != expected {
            return Err(Error::RepresentationMismatch {
                expected: expected.to_string(),
                actual: training.representation_tag().to_string(),
            });
        }
        if config.n_aps > training.ap_ids().len() {
            return Err(Error::MissingAp(
                training.ap_ids().last().copied().unwrap_or(0) + 1,
            ));
        }
        let truncated = training.truncate_aps(config.n_aps)?;
        let (training, pca) = match config.method {
            Method::I | Method::II => (truncated, None),
            Method::PS => {
                let powed = config.powed;
                (truncated.map_instances(|i| powed_transform(i, powed))?, None)
            }
            Method::ThreePca => {
                let model = pca_fit(truncated.instances(), config.pca_components)?;
                let projected = truncated.map_instances(|i| pca_project(&model, i))?;
                (projected, Some(model))
            }
        };
        if config.k > training.len() {
            return Err(Error::InvalidK {
                k: config.k,
                size: training.len(),
            });
        }
        Ok(Self { config, training, pca })
    }

    pub fn config(&self) -> &MethodConfig {
        &self.config
    }

    /// The transformed training set the kNN search runs against.
    pub fn training(&self) -> &TrainingSet {
        &self.training
    }

    pub fn pca_model(&self) -> Option<&PcaModel> {
        self.pca.as_ref()
    }

    /// Builds the query instance for a raw capture, using the first `n_aps`
    /// APs of the training AP order.
    pub fn query_instance(&self, raw: &SampleMatrix) -> Result<FingerprintInstance> {
        let sample = raw.select_aps(self.training.ap_ids())?;
        match self.config.method {
            Method::I | Method::II => build_quartile_instance(&sample, None),
            Method::PS => powed_transform(&build_mean_instance(&sample, None)?, self.config.powed),
            Method::ThreePca => {
                let model = self.pca.as_ref().expect("3PCA locator holds a model");
                pca_project(model, &build_mean_instance(&sample, None)?)
            }
        }
    }

    pub fn localize(&self, raw: &SampleMatrix) -> Result<PositionEstimate> {
        let query = self.query_instance(raw)?;
        self.localize_instance(&query)
    }

    /// Classifies an instance already in this locator's representation.
    pub fn localize_instance(&self, query: &FingerprintInstance) -> Result<PositionEstimate> {
        let neighbors = k_nearest(&self.training, query, self.config.k, self.config.method.metric())?;
        let (coordinates, rp_id, tie_broken) = if self.config.method.uses_centroid() {
            (weighted_centroid(&neighbors, &self.training)?, None, false)
        } else {
            let vote = majority_rp(&neighbors, &self.training)?;
            (vote.coordinates, Some(vote.rp_id), vote.tie_broken)
        };
        Ok(PositionEstimate {
            coordinates,
            rp_id,
            method: self.config.clone(),
            neighbors,
            tie_broken,
        })
    }
}

/// One-shot localization. Prefer [`Locator`] when issuing several queries,
/// since this re-derives the transformed training set (and PCA model) each call.
pub fn localize(config: &MethodConfig, training: &TrainingSet, raw: &SampleMatrix) -> Result<PositionEstimate> {
    Locator::new(config.clone(), training)?.localize(raw)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::representations::RepresentationTag;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quartile(attrs: Vec<f64>, rp: u32) -> FingerprintInstance {
        FingerprintInstance {
            attributes: attrs,
            rp_label: Some(rp),
            representation_tag: RepresentationTag::Quartile,
        }
    }

    fn coords(rps: &[(u32, Coordinates3D)]) -> BTreeMap<u32, Coordinates3D> {
        rps.iter().copied().collect()
    }

    fn set_with(rps: &[(u32, Coordinates3D)], labels: &[u32]) -> TrainingSet {
        let instances = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| quartile(vec![i as f64, 0.0, 0.0], l))
            .collect();
        TrainingSet::new(instances, coords(rps), vec![1]).unwrap()
    }

    fn nb(i: usize, d: f64, rp: u32) -> Neighbor {
        Neighbor {
            training_index: i,
            distance: d,
            rp_label: rp,
        }
    }

    const A: Coordinates3D = Coordinates3D::new(0.0, 0.0, 0.0);
    const B: Coordinates3D = Coordinates3D::new(2.0, 2.0, 0.0);
    const C: Coordinates3D = Coordinates3D::new(3.0, 0.0, 0.0);

    #[test]
    fn majority_examples() {
        let t = set_with(&[(1, A), (2, B)], &[1, 1, 2, 2]);
        let v = majority_rp(&[nb(0, 0.1, 1), nb(1, 0.2, 1), nb(2, 0.3, 2)], &t).unwrap();
        assert_eq!((v.rp_id, v.coordinates, v.tie_broken), (1, A, false));

        let v = majority_rp(&[nb(0, 0.1, 1), nb(2, 0.2, 2), nb(1, 0.3, 1), nb(3, 0.4, 2)], &t).unwrap();
        assert_eq!((v.rp_id, v.tie_broken), (1, true));

        let v = majority_rp(&[nb(2, 0.1, 2), nb(0, 0.2, 1), nb(1, 0.3, 1), nb(3, 0.4, 2)], &t).unwrap();
        assert_eq!((v.rp_id, v.coordinates), (2, B));

        let v = majority_rp(&[nb(3, 0.7, 2)], &t).unwrap();
        assert_eq!((v.rp_id, v.tie_broken), (2, false));
        assert!(majority_rp(&[], &t).is_err());
    }

    #[test]
    fn tie_among_non_nearest_rps() {
        // nearest is RP3 (count 1); RPs 1 and 2 tie at 2 and RP2's closest member comes first
        let t = set_with(&[(1, A), (2, B), (3, C)], &[1, 1, 2, 2, 3, 3]);
        let n = [nb(4, 0.1, 3), nb(2, 0.2, 2), nb(0, 0.3, 1), nb(1, 0.4, 1), nb(3, 0.5, 2)];
        let v = majority_rp(&n, &t).unwrap();
        assert_eq!((v.rp_id, v.tie_broken), (2, true));
    }

    #[test]
    fn centroid_examples() {
        let t = set_with(&[(1, A), (2, B), (3, C)], &[1, 1, 2, 2, 3, 3]);
        assert_eq!(weighted_centroid(&[nb(0, 0.1, 2), nb(1, 0.2, 2)], &t).unwrap(), B);
        assert_eq!(
            weighted_centroid(&[nb(0, 0.1, 1), nb(1, 0.2, 2)], &t).unwrap(),
            Coordinates3D::new(1.0, 1.0, 0.0)
        );
        // (2*0 + 1*3) / 3
        assert_eq!(
            weighted_centroid(&[nb(0, 0.1, 1), nb(1, 0.2, 1), nb(4, 0.3, 3)], &t).unwrap(),
            Coordinates3D::new(1.0, 0.0, 0.0)
        );
        assert!(weighted_centroid(&[], &t).is_err());
    }

    #[test]
    fn knn_basic_cases() {
        let t = set_with(&[(1, A), (2, B)], &[1, 2, 1, 2]);
        let q = quartile(vec![2.0, 0.0, 0.0], 1);
        let n = k_nearest(&t, &q, 1, Metric::Euclidean).unwrap();
        assert_eq!((n[0].training_index, n[0].distance), (2, 0.0));

        let all = k_nearest(&t, &q, 4, Metric::Euclidean).unwrap();
        let idx: Vec<usize> = all.iter().map(|n| n.training_index).collect();
        // distances 2, 1, 0, 1: tie between 1 and 3 resolved by index
        assert_eq!(idx, vec![2, 1, 3, 0]);

        assert!(matches!(k_nearest(&t, &q, 5, Metric::Euclidean), Err(Error::InvalidK { .. })));
        assert!(matches!(k_nearest(&t, &q, 0, Metric::Euclidean), Err(Error::InvalidK { .. })));
        let short = quartile(vec![1.0], 1);
        assert!(k_nearest(&t, &short, 1, Metric::Euclidean).is_err());
        let mut wrong = q.clone();
        wrong.representation_tag = RepresentationTag::Mean;
        assert!(k_nearest(&t, &wrong, 1, Metric::Euclidean).is_err());
    }

    fn oracle_knn(t: &TrainingSet, q: &[f64], k: usize, metric: Metric) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = t
            .instances()
            .iter()
            .enumerate()
            .map(|(i, inst)| (i, metric.distance(q, &inst.attributes).unwrap()))
            .collect();
        // stable sort on distance alone keeps index order among ties
        all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        all.truncate(k);
        all
    }

    #[test]
    fn knn_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let rps: Vec<(u32, Coordinates3D)> = (1..=10).map(|i| (i, Coordinates3D::new(i as f64, 0.0, 0.0))).collect();
        for metric in [Metric::Euclidean, Metric::Sorensen] {
            for _ in 0..20 {
                let instances: Vec<FingerprintInstance> = (0..200)
                    .map(|i| quartile((0..6).map(|_| rng.random_range(0..4) as f64).collect(), (i % 10) as u32 + 1))
                    .collect();
                let t = TrainingSet::new(instances, coords(&rps), vec![1, 2]).unwrap();
                let q: Vec<f64> = (0..6).map(|_| rng.random_range(0..4) as f64 + 0.5).collect();
                for k in [1, 3, 7] {
                    let got: Vec<(usize, f64)> = k_nearest(&t, &quartile(q.clone(), 1), k, metric)
                        .unwrap()
                        .iter()
                        .map(|n| (n.training_index, n.distance))
                        .collect();
                    assert_eq!(got, oracle_knn(&t, &q, k, metric));
                }
            }
        }
    }

    fn raw(rows: Vec<Vec<f64>>) -> SampleMatrix {
        let n = rows[0].len();
        SampleMatrix::new(rows, (1..=n as u32).collect()).unwrap()
    }

    #[test]
    fn locator_rejects_bad_configs() {
        let t = set_with(&[(1, A)], &[1]);
        assert!(Locator::new(MethodConfig::new(Method::I, 0, 1), &t).is_err());
        assert!(Locator::new(MethodConfig::new(Method::I, 2, 1), &t).is_err());
        assert!(matches!(Locator::new(MethodConfig::new(Method::I, 1, 2), &t), Err(Error::MissingAp(2))));
        assert!(matches!(
            Locator::new(MethodConfig::new(Method::PS, 1, 1), &t),
            Err(Error::RepresentationMismatch { .. })
        ));
        assert!(matches!(
            MethodConfig::new(Method::ThreePca, 1, 2).validate(),
            Err(Error::TooFewAttributes { needed: 3, actual: 2 })
        ));
        let loc = Locator::new(MethodConfig::new(Method::I, 1, 1), &t).unwrap();
        let query = SampleMatrix::new(vec![vec![-50.0]], vec![7]).unwrap();
        assert!(matches!(loc.localize(&query), Err(Error::MissingAp(1))));
    }

    #[test]
    fn method_parsing_and_serde() {
        assert_eq!("3pca".parse::<Method>().unwrap(), Method::ThreePca);
        assert_eq!("ii".parse::<Method>().unwrap(), Method::II);
        assert!("iv".parse::<Method>().is_err());
        let cfg = MethodConfig::new(Method::ThreePca, 3, 5);
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"3PCA\""));
        let back: MethodConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let minimal: MethodConfig = serde_json::from_str(r#"{"method":"PS","k":1,"n_aps":4}"#).unwrap();
        assert_eq!(minimal, MethodConfig::new(Method::PS, 1, 4));
    }

    #[test]
    fn method_two_centroid_composition() {
        // RP1 instances near 0, RP2 near 10; query closest to two RP1 and one RP2 instance
        let rps = [(1, A), (2, C)];
        let instances = vec![
            quartile(vec![0.0, 0.0, 0.0], 1),
            quartile(vec![1.0, 1.0, 1.0], 1),
            quartile(vec![3.0, 3.0, 3.0], 2),
            quartile(vec![10.0, 10.0, 10.0], 2),
        ];
        let t = TrainingSet::new(instances, coords(&rps), vec![1]).unwrap();
        let loc = Locator::new(MethodConfig::new(Method::II, 3, 1), &t).unwrap();
        let est = loc.localize(&raw(vec![vec![1.0]])).unwrap();
        let idx: Vec<usize> = est.neighbors.iter().map(|n| n.training_index).collect();
        assert_eq!(idx, vec![1, 0, 2]);
        assert_eq!(est.coordinates, Coordinates3D::new(1.0, 0.0, 0.0));
        assert_eq!(est.rp_id, None);
    }

    fn random_set(rng: &mut ChaCha8Rng, classes: u32, per: usize, n: usize) -> TrainingSet {
        let rps: Vec<(u32, Coordinates3D)> = (1..=classes)
            .map(|i| (i, Coordinates3D::new(rng.random_range(0.0..3.5), rng.random_range(0.0..3.5), 0.87)))
            .collect();
        let instances = (0..classes as usize * per)
            .map(|i| quartile((0..3 * n).map(|_| rng.random_range(-80.0..-40.0)).collect(), (i / per) as u32 + 1))
            .collect();
        TrainingSet::new(instances, coords(&rps), (1..=n as u32).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn k1_methods_agree(seed in any::<u64>(), n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_set(&mut rng, 5, 3, n);
            let q = quartile((0..3 * n).map(|_| rng.random_range(-80..-40) as f64).collect(), 1);
            let a = Locator::new(MethodConfig::new(Method::I, 1, n), &t).unwrap().localize_instance(&q).unwrap();
            let b = Locator::new(MethodConfig::new(Method::II, 1, n), &t).unwrap().localize_instance(&q).unwrap();
            prop_assert_eq!(a.coordinates, b.coordinates);
        }

        #[test]
        fn aggregation_stays_among_neighbors(seed in any::<u64>(), k in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_set(&mut rng, 4, 3, 2);
            let q = quartile((0..6).map(|_| rng.random_range(-80..-40) as f64).collect(), 1);
            let n = k_nearest(&t, &q, k, Metric::Euclidean).unwrap();
            let vote = majority_rp(&n, &t).unwrap();
            prop_assert!(n.iter().any(|x| t.rp_position(x.rp_label) == Some(vote.coordinates)));

            let c = weighted_centroid(&n, &t).unwrap();
            let pts: Vec<Coordinates3D> = n.iter().map(|x| t.rp_position(x.rp_label).unwrap()).collect();
            // the centroid is the plain mean over neighbor list entries, hence inside the hull
            let mean_x = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
            let mean_y = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
            prop_assert!((c.x - mean_x).abs() < 1e-12 && (c.y - mean_y).abs() < 1e-12);
            prop_assert!(pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) <= c.x + 1e-12);
            prop_assert!(pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) >= c.x - 1e-12);
        }

        #[test]
        fn knn_order_invariant_to_positive_scaling(seed in any::<u64>(), c in 0.1..10.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_set(&mut rng, 4, 5, 3);
            let q = quartile((0..9).map(|_| rng.random_range(-80..-40) as f64).collect(), 1);
            let scaled = t.map_instances(|i| Ok(quartile(i.attributes.iter().map(|x| x * c).collect(), i.rp_label.unwrap()))).unwrap();
            let qs = quartile(q.attributes.iter().map(|x| x * c).collect(), 1);
            let a: Vec<usize> = k_nearest(&t, &q, 20, Metric::Euclidean).unwrap().iter().map(|n| n.training_index).collect();
            let b: Vec<usize> = k_nearest(&scaled, &qs, 20, Metric::Euclidean).unwrap().iter().map(|n| n.training_index).collect();
            prop_assert_eq!(a, b);
        }
    }
}
