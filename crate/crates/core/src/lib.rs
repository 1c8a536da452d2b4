//! Benchmark engine for binary screening classifiers on AQ-10 style cohorts.
//!
//! Every (model, cohort) cell is scored along four axes: discrimination,
//! calibration, permutation-importance interpretability and robustness to
//! perturbed inputs. Models are additionally ranked with a variance-penalized
//! asymmetric misclassification cost (HAP) computed over stratified folds,
//! together with the SNR-optimal penalty weight and a weight-ratio
//! sensitivity sweep.
//!
//! Module map:
//!
//! - [`ingest`]: cohort CSV loading, deduplication, stratified fold plans
//! - [`metrics`]: confusion counts, discrimination and calibration metrics
//! - [`hap`]: fold cost, HAP aggregation, crossovers, SNR curve, sensitivity
//! - [`robustness`]: flip / Gaussian / removal perturbations and composite R
//! - [`interpret`]: permutation importance, normalization and consensus
//! - [`modelhost`]: native reference classifiers and the external adapter client
//! - [`pipeline`]: orchestration, scorecard, recommendations and report files

pub mod error;
pub mod hap;
pub mod ingest;
pub mod interpret;
pub mod matrix;
pub mod metrics;
pub mod modelhost;
pub mod pipeline;
pub mod rng;
pub mod robustness;

pub use error::{BenchError, Result};
pub use matrix::Matrix;

/// Number of AQ-10 questionnaire items.
pub const N_FEATURES: usize = 10;

/// Feature column names, in matrix column order.
pub const FEATURE_NAMES: [&str; N_FEATURES] =
    ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10"];
