//! Indoor localization from Wi-Fi RSSI fingerprints.
//!
//! Raw RSSI samples (an `m x n` matrix per capture, one column per access
//! point) are turned into instance vectors and classified with kNN against a
//! class-balanced training set whose classes are reference points (RPs).
//!
//! Four estimators are provided:
//!
//! | method | representation          | similarity | coordinates          |
//! |--------|-------------------------|------------|----------------------|
//! | I      | quartiles (Q1,Q2,Q3)    | Euclidean  | majority RP          |
//! | II     | quartiles (Q1,Q2,Q3)    | Euclidean  | weighted RP centroid |
//! | 3PCA   | per-AP mean, 3-comp PCA | Euclidean  | weighted RP centroid |
//! | PS     | per-AP mean, Powed      | Sørensen   | majority RP          |
//!
//! The [`propagation`] module simulates datasets with log-normal shadowing
//! and [`evaluation`] runs the (n, k) treatment grid, error CDF and m-sweep.

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod locator;
pub mod metrics;
pub mod propagation;
pub mod representations;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Coordinates3D, Scenario};
pub use locator::{Locator, Method, MethodConfig, PositionEstimate};
pub use representations::{FingerprintInstance, SampleMatrix, TrainingSet};

/// Version written into every JSON/CSV document this crate produces.
pub const SCHEMA_VERSION: u32 = 1;
