//! On-disk formats.
//!
//! A dataset directory holds `readings.csv` (one row per reading, header
//! `rp_id,instance_idx,reading_idx,ap_id,rssi_dbm`) and `metadata.json`
//! (scenario, AP column order, generation parameters, seed). Treatment results
//! are JSON lines; CDFs and fingerprints are plain CSV.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evaluation::{CdfPoint, TreatmentResult};
use crate::geometry::Scenario;
use crate::locator::Method;
use crate::propagation::{GenerationSpec, LogNormalParams};
use crate::representations::{FingerprintInstance, LabeledSample, RepresentationTag, SampleMatrix};
use crate::{Error, Result, SCHEMA_VERSION};

pub const RAW_HEADER: [&str; 5] = ["rp_id", "instance_idx", "reading_idx", "ap_id", "rssi_dbm"];
pub const READINGS_FILE: &str = "readings.csv";
pub const METADATA_FILE: &str = "metadata.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    read_json(path)
}

/// Writes samples in order: each sample's readings row by row, APs in column order.
pub fn write_raw_csv(samples: &[LabeledSample], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(RAW_HEADER)?;
    for s in samples {
        let (rp, inst) = (s.rp_id.to_string(), s.instance_idx.to_string());
        for r in 0..s.matrix.m() {
            let reading = r.to_string();
            for (j, ap) in s.matrix.ap_ids().iter().enumerate() {
                w.write_record([
                    rp.as_str(),
                    inst.as_str(),
                    reading.as_str(),
                    &ap.to_string(),
                    &s.matrix.get(r, j).to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

/// Reads a raw-readings CSV, grouping rows into one matrix per
/// `(rp_id, instance_idx)` with columns in `ap_order`. Groups keep the order
/// in which they first appear.
pub fn read_raw_csv(path: &Path, ap_order: &[u32]) -> Result<Vec<LabeledSample>> {
    let schema = |line: u64, message: String| Error::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != RAW_HEADER {
        return Err(schema(1, format!("expected header {}, got {}", RAW_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","))));
    }
    let ap_col: HashMap<u32, usize> = ap_order.iter().enumerate().map(|(i, a)| (*a, i)).collect();

    type Cells = BTreeMap<(usize, usize), f64>;
    let mut order: Vec<(u32, u32)> = Vec::new();
    let mut groups: HashMap<(u32, u32), Cells> = HashMap::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != RAW_HEADER.len() {
            return Err(schema(line, format!("expected 5 fields, got {}", record.len())));
        }
        fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<T, String> {
            let raw = rec[i].trim();
            raw.parse().map_err(|_| format!("invalid {} {raw:?}", RAW_HEADER[i]))
        }
        let parsed = (|| -> std::result::Result<_, String> {
            Ok((
                field::<u32>(&record, 0)?,
                field::<u32>(&record, 1)?,
                field::<usize>(&record, 2)?,
                field::<u32>(&record, 3)?,
                field::<f64>(&record, 4)?,
            ))
        })();
        let (rp_id, instance_idx, reading_idx, ap_id, rssi) = parsed.map_err(|m| schema(line, m))?;
        if !rssi.is_finite() {
            return Err(schema(line, format!("non-finite rssi_dbm {rssi}")));
        }
        let col = *ap_col
            .get(&ap_id)
            .ok_or_else(|| schema(line, format!("ap_id {ap_id} is not in the AP order {ap_order:?}")))?;
        let key = (rp_id, instance_idx);
        let cells = groups.entry(key).or_insert_with(|| {
            order.push(key);
            BTreeMap::new()
        });
        if cells.insert((reading_idx, col), rssi).is_some() {
            return Err(schema(
                line,
                format!("duplicate reading {reading_idx} of AP {ap_id} for rp {rp_id}, instance {instance_idx}"),
            ));
        }
    }

    order
        .into_iter()
        .map(|(rp_id, instance_idx)| {
            let cells = &groups[&(rp_id, instance_idx)];
            let ragged = |message: String| Error::Ragged {
                rp_id,
                instance_idx,
                message,
            };
            let m = cells.keys().map(|(r, _)| r + 1).max().unwrap_or(0);
            let mut readings = Vec::with_capacity(m * ap_order.len());
            for r in 0..m {
                for (c, ap) in ap_order.iter().enumerate() {
                    let v = cells
                        .get(&(r, c))
                        .ok_or_else(|| ragged(format!("missing reading {r} of AP {ap}")))?;
                    readings.push(*v);
                }
            }
            let matrix = SampleMatrix::from_row_major(m, ap_order.to_vec(), readings)
                .map_err(|e| ragged(e.to_string()))?;
            Ok(LabeledSample {
                rp_id,
                instance_idx,
                matrix,
            })
        })
        .collect()
}

/// Parameters a simulated dataset was generated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationEcho {
    pub params: LogNormalParams,
    pub m: usize,
    pub instances_per_rp: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub schema_version: u32,
    pub scenario: Scenario,
    /// Column order of every sample matrix.
    pub ap_order: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationEcho>,
    /// Wall-clock creation time in seconds since the Unix epoch. Not part of
    /// any determinism guarantee.
    #[serde(default)]
    pub timestamp: Option<u64>,
}

impl DatasetMetadata {
    pub fn for_generation(spec: &GenerationSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: spec.scenario.clone(),
            ap_order: spec.scenario.ap_ids(),
            generation: Some(GenerationEcho {
                params: spec.params,
                m: spec.m,
                instances_per_rp: spec.instances_per_rp,
                seed: spec.seed,
            }),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs()),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.generation.as_ref().map(|g| g.seed)
    }
}

/// A dataset directory in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub metadata: DatasetMetadata,
    pub samples: Vec<LabeledSample>,
}

impl DatasetBundle {
    pub fn new(metadata: DatasetMetadata, samples: Vec<LabeledSample>) -> Result<Self> {
        let bundle = Self { metadata, samples };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<()> {
        let md = &self.metadata;
        if md.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidScenario(format!(
                "unsupported schema_version {}",
                md.schema_version
            )));
        }
        let mut sorted = md.ap_order.clone();
        sorted.sort_unstable();
        if sorted != md.scenario.ap_ids() {
            return Err(Error::IncompatibleDatasets(format!(
                "metadata AP order {:?} is not a permutation of the scenario APs",
                md.ap_order
            )));
        }
        for s in &self.samples {
            if md.scenario.rp_position(s.rp_id).is_none() {
                return Err(Error::UnknownRp(s.rp_id));
            }
            if s.matrix.ap_ids() != md.ap_order.as_slice() {
                return Err(Error::IncompatibleDatasets(format!(
                    "sample (rp {}, instance {}) columns {:?} differ from metadata AP order",
                    s.rp_id,
                    s.instance_idx,
                    s.matrix.ap_ids()
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_raw_csv(&self.samples, &dir.join(READINGS_FILE))?;
        write_json(&self.metadata, &dir.join(METADATA_FILE))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let metadata: DatasetMetadata = read_json(&dir.join(METADATA_FILE))?;
        let samples = read_raw_csv(&dir.join(READINGS_FILE), &metadata.ap_order)?;
        Self::new(metadata, samples)
    }
}

/// `rp_id,attr_1,...,attr_K`; `rp_id` is empty for unlabeled instances.
pub fn write_instances_csv(instances: &[FingerprintInstance], path: &Path) -> Result<()> {
    let width = instances.first().map(|i| i.attributes.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["rp_id".to_string()];
    header.extend((1..=width).map(|i| format!("attr_{i}")));
    w.write_record(&header)?;
    for inst in instances {
        if inst.attributes.len() != width {
            return Err(Error::LengthMismatch {
                expected: width,
                actual: inst.attributes.len(),
            });
        }
        let mut row = vec![inst.rp_label.map(|l| l.to_string()).unwrap_or_default()];
        row.extend(inst.attributes.iter().map(|a| a.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_instances_csv(path: &Path, tag: RepresentationTag) -> Result<Vec<FingerprintInstance>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let schema = |message: String| Error::Schema {
            path: path.to_path_buf(),
            line,
            message,
        };
        let label = match record.get(0).map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(s.parse::<u32>().map_err(|_| schema(format!("invalid rp_id {s:?}")))?),
        };
        let attributes = record
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>().map_err(|_| schema(format!("invalid attribute {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(FingerprintInstance {
            attributes,
            rp_label: label,
            representation_tag: tag,
        });
    }
    Ok(out)
}

/// JSON form of an instance set with its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintDocument {
    pub schema_version: u32,
    pub representation_tag: RepresentationTag,
    pub ap_order: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub instances: Vec<FingerprintInstance>,
}

/// One line of a treatment-grid results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub schema_version: u32,
    pub method: Method,
    pub n_aps: usize,
    pub k: usize,
    pub mean_error_m: f64,
    pub estimate_count: usize,
    pub train_seed: Option<u64>,
    pub test_seed: Option<u64>,
}

impl ResultLine {
    pub fn new(r: &TreatmentResult, train_seed: Option<u64>, test_seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method: r.method,
            n_aps: r.n_aps,
            k: r.k,
            mean_error_m: r.mean_error_m,
            estimate_count: r.estimate_count,
            train_seed,
            test_seed,
        }
    }

    pub fn result(&self) -> TreatmentResult {
        TreatmentResult {
            method: self.method,
            n_aps: self.n_aps,
            k: self.k,
            mean_error_m: self.mean_error_m,
            estimate_count: self.estimate_count,
        }
    }
}

pub fn write_results_jsonl<W: Write>(lines: &[ResultLine], mut out: W) -> Result<()> {
    for l in lines {
        serde_json::to_writer(&mut out, l)?;
        out.write_all(b"\n").map_err(|source| Error::Io {
            path: PathBuf::from("<results>"),
            source,
        })?;
    }
    Ok(())
}

pub fn read_results_jsonl(path: &Path) -> Result<Vec<ResultLine>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ResultLine = serde_json::from_str(&line).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        out.push(parsed);
    }
    Ok(out)
}

/// `method,n_aps,k,mean_error_m,estimate_count` for plotting.
pub fn write_results_csv(results: &[TreatmentResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["method", "n_aps", "k", "mean_error_m", "estimate_count"])?;
    for r in results {
        w.write_record([
            r.method.to_string(),
            r.n_aps.to_string(),
            r.k.to_string(),
            r.mean_error_m.to_string(),
            r.estimate_count.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

/// `threshold_m,cumulative_fraction`.
pub fn write_cdf_csv(points: &[CdfPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["threshold_m", "cumulative_fraction"])?;
    for p in points {
        w.write_record([p.threshold_m.to_string(), p.cumulative_fraction.to_string()])?;
    }
    w.flush().map_err(io_err(path))
}
