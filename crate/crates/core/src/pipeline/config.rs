use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::hap::{default_ratio_grid, PenaltyWeights, DEFAULT_LAMBDA};
use crate::ingest::CohortId;
use crate::interpret::DEFAULT_REPEATS;
use crate::metrics::{DEFAULT_ECE_BINS, MAX_ECE_BINS};
use crate::modelhost::ModelSpec;
use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortInput {
    pub id: CohortId,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// HAP at the configured `lambda` only.
    #[default]
    Fixed,
    /// Also compute `lambda*` per cohort and report HAP there.
    Auto,
}

fn default_seed() -> u64 {
    42
}
fn default_test_frac() -> f64 {
    0.2
}
fn default_folds() -> usize {
    5
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_ece_bins() -> usize {
    DEFAULT_ECE_BINS
}
fn default_repeats() -> usize {
    DEFAULT_REPEATS
}
fn default_ratios() -> Vec<f64> {
    default_ratio_grid()
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("bench-out")
}
fn default_jobs() -> usize {
    1
}

/// Benchmark run configuration (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cohorts: Vec<CohortInput>,
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_test_frac")]
    pub test_frac: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub weights: PenaltyWeights,
    #[serde(default)]
    pub lambda_mode: LambdaMode,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_ece_bins")]
    pub ece_bins: usize,
    #[serde(default = "default_ratios")]
    pub sweep_ratios: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub importance_repeats: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(cohorts: Vec<CohortInput>, models: Vec<ModelSpec>) -> Self {
        Self {
            cohorts,
            models,
            seed: default_seed(),
            test_frac: default_test_frac(),
            folds: default_folds(),
            weights: PenaltyWeights::default(),
            lambda_mode: LambdaMode::default(),
            lambda: default_lambda(),
            ece_bins: default_ece_bins(),
            sweep_ratios: default_ratios(),
            importance_repeats: default_repeats(),
            output_dir: default_output_dir(),
            jobs: default_jobs(),
        }
    }

    /// Reads a JSON config; relative paths are resolved against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for c in &mut cfg.cohorts {
            if c.path.is_relative() {
                c.path = base.join(&c.path);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::invalid(m));
        if self.cohorts.is_empty() {
            return bad("config lists no cohorts".into());
        }
        if self.models.is_empty() {
            return bad("config lists no models".into());
        }
        let mut ids: Vec<&str> = self.models.iter().map(|m| m.model_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate model_id `{}`", w[0]));
        }
        let mut cohorts: Vec<CohortId> = self.cohorts.iter().map(|c| c.id).collect();
        cohorts.sort_unstable();
        if cohorts.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate cohort id".into());
        }
        for m in &self.models {
            m.validate()?;
        }
        if !(self.test_frac > 0.0 && self.test_frac < 1.0) {
            return bad(format!("test_frac {} not in (0,1)", self.test_frac));
        }
        if !(2..=20).contains(&self.folds) {
            return bad(format!("folds {} not in 2..=20", self.folds));
        }
        self.weights.validate()?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda {} must be >= 0", self.lambda));
        }
        if !(1..=MAX_ECE_BINS).contains(&self.ece_bins) {
            return bad(format!(
                "ece_bins {} not in 1..={MAX_ECE_BINS}",
                self.ece_bins
            ));
        }
        if self.sweep_ratios.is_empty()
            || self.sweep_ratios.iter().any(|r| !(1.0..=20.0).contains(r))
        {
            return bad("sweep_ratios must be non-empty values in [1,20]".into());
        }
        if !(1..=100).contains(&self.importance_repeats) {
            return bad(format!(
                "importance_repeats {} not in 1..=100",
                self.importance_repeats
            ));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        Ok(())
    }
}
