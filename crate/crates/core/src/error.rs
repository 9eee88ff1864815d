use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{what} at ({x}, {y}, {z}) lies outside the room ({dx} x {dy} x {dz})")]
    OutsideRoom {
        what: String,
        x: f64,
        y: f64,
        z: f64,
        dx: f64,
        dy: f64,
        dz: f64,
    },

    #[error("invalid sample matrix: {0}")]
    InvalidMatrix(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("attribute {index} is {value} dBm, below the Powed floor {floor} dBm")]
    BelowFloor { index: usize, value: f64, floor: f64 },

    #[error("invalid Powed parameters: {0}")]
    InvalidPowed(String),

    #[error("Sørensen needs non-negative entries; entry {index} is {value}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("Sørensen is undefined for an all-zero pair")]
    ZeroSum,

    #[error("PCA needs at least {needed} attributes, got {actual}")]
    TooFewAttributes { needed: usize, actual: usize },

    #[error("PCA needs at least 2 instances, got {0}")]
    TooFewInstances(usize),

    #[error("representation mismatch: expected {expected}, got {actual}")]
    RepresentationMismatch { expected: String, actual: String },

    #[error("class imbalance: rp {rp_id} has {count} instances, expected {expected}")]
    ClassImbalance {
        rp_id: u32,
        count: usize,
        expected: usize,
    },

    #[error("unknown rp_id {0}")]
    UnknownRp(u32),

    #[error("instance {0} has no rp label")]
    MissingLabel(usize),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("k = {k} is invalid for a training set of {size} instances")]
    InvalidK { k: usize, size: usize },

    #[error("sample is missing AP {0}")]
    MissingAp(u32),

    #[error("invalid method configuration: {0}")]
    InvalidConfig(String),

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("degenerate calibration set: {0}")]
    DegenerateFit(String),

    #[error("AP {ap_id} coincides with RP {rp_id}")]
    CoincidentAp { ap_id: u32, rp_id: u32 },

    #[error("incompatible datasets: {0}")]
    IncompatibleDatasets(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("ragged sample for rp {rp_id}, instance {instance_idx}: {message}")]
    Ragged {
        rp_id: u32,
        instance_idx: u32,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
