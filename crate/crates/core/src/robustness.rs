//! Perturbation harness for the robustness axis.
//!
//! Nine standard conditions are applied to the clean test matrix: feature
//! flips of 10/20/30% of all cells, Gaussian noise with sigma 0.1/0.2/0.3
//! (clipped to [0,1]), and zeroing of the top 1/2/3 most important
//! features. Composite robustness is `1 - mean(clean_acc - perturbed_acc)`
//! and is not clamped.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::interpret::ImportanceVector;
use crate::metrics::{accuracy, DEFAULT_THRESHOLD};
use crate::modelhost::ProbModel;
use crate::rng::SplitMix64;
use crate::{BenchError, Matrix, Result};

pub const BAND_HIGH: f64 = 0.88;
pub const BAND_MEDIUM: f64 = 0.82;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    FeatureFlip,
    GaussianNoise,
    FeatureRemoval,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::FeatureFlip => "feature_flip",
            Protocol::GaussianNoise => "gaussian_noise",
            Protocol::FeatureRemoval => "feature_removal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flip" | "feature_flip" => Some(Protocol::FeatureFlip),
            "noise" | "gaussian_noise" => Some(Protocol::GaussianNoise),
            "removal" | "feature_removal" => Some(Protocol::FeatureRemoval),
            _ => None,
        }
    }

    /// Levels of the standard protocol.
    pub fn standard_levels(self) -> [f64; 3] {
        match self {
            Protocol::FeatureFlip => [0.10, 0.20, 0.30],
            Protocol::GaussianNoise => [0.1, 0.2, 0.3],
            Protocol::FeatureRemoval => [1.0, 2.0, 3.0],
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub protocol: Protocol,
    pub level: f64,
    pub seed: u64,
}

impl PerturbationSpec {
    /// Checks the level against the standard set, or against the protocol's
    /// legal domain when `exploratory`.
    pub fn validate(&self, exploratory: bool) -> Result<()> {
        let l = self.level;
        let ok = if exploratory {
            match self.protocol {
                Protocol::FeatureFlip => (0.0..=1.0).contains(&l),
                Protocol::GaussianNoise => l > 0.0 && l.is_finite(),
                Protocol::FeatureRemoval => l >= 1.0 && l.fract() == 0.0,
            }
        } else {
            self.protocol.standard_levels().contains(&l)
        };
        if ok {
            Ok(())
        } else {
            Err(BenchError::invalid(format!(
                "level {l} is not valid for {}",
                self.protocol
            )))
        }
    }
}

/// The nine standard conditions; condition `i` uses seed `seed + i`.
pub fn standard_conditions(seed: u64) -> Vec<PerturbationSpec> {
    [
        Protocol::FeatureFlip,
        Protocol::GaussianNoise,
        Protocol::FeatureRemoval,
    ]
    .into_iter()
    .flat_map(|p| p.standard_levels().map(move |level| (p, level)))
    .enumerate()
    .map(|(i, (protocol, level))| PerturbationSpec {
        protocol,
        level,
        seed: seed.wrapping_add(i as u64),
    })
    .collect()
}

/// Cells (as flat row-major indices) chosen for a flip of fraction `k`:
/// `round(k * n * d)` distinct cells, uniformly without replacement
/// (partial Fisher-Yates over all cell indices).
pub fn flip_cells(n_cells: usize, k: f64, seed: u64) -> Vec<usize> {
    let count = ((k * n_cells as f64).round() as usize).min(n_cells);
    let mut cells: Vec<usize> = (0..n_cells).collect();
    let mut rng = SplitMix64::new(seed);
    for i in 0..count {
        let j = i + rng.below((n_cells - i) as u64) as usize;
        cells.swap(i, j);
    }
    cells.truncate(count);
    cells
}

pub fn perturb_flip(x: &Matrix, k: f64, seed: u64) -> Result<Matrix> {
    if !x.is_binary() {
        return Err(BenchError::invalid("feature flip needs a binary matrix"));
    }
    if !(0.0..=1.0).contains(&k) {
        return Err(BenchError::invalid(format!(
            "flip fraction {k} not in [0,1]"
        )));
    }
    let mut out = x.clone();
    let data = out.as_mut_slice();
    for c in flip_cells(data.len(), k, seed) {
        data[c] = 1.0 - data[c];
    }
    Ok(out)
}

/// Adds N(0, sigma^2) noise cell by cell (row-major draw order) and clips
/// to [0,1].
pub fn perturb_gaussian(x: &Matrix, sigma: f64, seed: u64) -> Result<Matrix> {
    if x.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(BenchError::invalid(
            "gaussian noise input must lie in [0,1]",
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(BenchError::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        *v = (*v + sigma * rng.standard_normal()).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Raw noise draws used by [`perturb_gaussian`], before adding and clipping.
pub fn gaussian_draws(n_cells: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    (0..n_cells)
        .map(|_| sigma * rng.standard_normal())
        .collect()
}

/// Indices of the `k` highest scores, lower index first on ties.
pub fn top_k_features(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

pub fn perturb_removal(x: &Matrix, importance: &[f64], k: usize) -> Result<Matrix> {
    let d = x.n_cols();
    if importance.len() != d {
        return Err(BenchError::LengthMismatch {
            expected: d,
            got: importance.len(),
        });
    }
    if k == 0 || k > d {
        return Err(BenchError::invalid(format!(
            "cannot remove {k} of {d} features"
        )));
    }
    let mut out = x.clone();
    for j in top_k_features(importance, k) {
        for i in 0..out.n_rows() {
            out.set(i, j, 0.0);
        }
    }
    Ok(out)
}

pub fn apply(x: &Matrix, spec: &PerturbationSpec, importance: &[f64]) -> Result<Matrix> {
    match spec.protocol {
        Protocol::FeatureFlip => perturb_flip(x, spec.level, spec.seed),
        Protocol::GaussianNoise => perturb_gaussian(x, spec.level, spec.seed),
        Protocol::FeatureRemoval => perturb_removal(x, importance, spec.level as usize),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub spec: PerturbationSpec,
    pub perturbed_accuracy: f64,
    pub delta_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub clean_accuracy: f64,
    pub per_condition: Vec<ConditionResult>,
    pub composite_r: f64,
}

impl RobustnessReport {
    pub fn band(&self) -> RobustnessBand {
        robustness_band(self.composite_r)
    }

    pub fn mean_delta(&self, protocol: Protocol) -> Option<f64> {
        let ds: Vec<f64> = self
            .per_condition
            .iter()
            .filter(|c| c.spec.protocol == protocol)
            .map(|c| c.delta_acc)
            .collect();
        (!ds.is_empty()).then(|| ds.iter().sum::<f64>() / ds.len() as f64)
    }
}

/// Runs the given conditions against `model`: one clean prediction call,
/// then one call per condition.
pub fn evaluate_conditions(
    model: &mut dyn ProbModel,
    x: &Matrix,
    y: &[u8],
    importance: &[f64],
    conditions: &[PerturbationSpec],
) -> Result<RobustnessReport> {
    if conditions.is_empty() {
        return Err(BenchError::invalid("no perturbation conditions"));
    }
    let clean = model
        .predict_proba(x)
        .map_err(|e| e.context("robustness: clean predictions"))?;
    let clean_accuracy = accuracy(&clean, y, DEFAULT_THRESHOLD)?;
    let mut per_condition = Vec::with_capacity(conditions.len());
    for spec in conditions {
        let label = format!("robustness: {} level {}", spec.protocol, spec.level);
        let xp = apply(x, spec, importance).map_err(|e| e.context(label.clone()))?;
        let probs = model.predict_proba(&xp).map_err(|e| e.context(label))?;
        let perturbed_accuracy = accuracy(&probs, y, DEFAULT_THRESHOLD)?;
        per_condition.push(ConditionResult {
            spec: *spec,
            perturbed_accuracy,
            delta_acc: clean_accuracy - perturbed_accuracy,
        });
    }
    let mean_delta =
        per_condition.iter().map(|c| c.delta_acc).sum::<f64>() / per_condition.len() as f64;
    Ok(RobustnessReport {
        clean_accuracy,
        per_condition,
        composite_r: 1.0 - mean_delta,
    })
}

/// The nine standard conditions (exactly ten prediction calls).
pub fn evaluate_robustness(
    model: &mut dyn ProbModel,
    x: &Matrix,
    y: &[u8],
    importance: &ImportanceVector,
    seed: u64,
) -> Result<RobustnessReport> {
    evaluate_conditions(model, x, y, &importance.scores, &standard_conditions(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessBand {
    High,
    Medium,
    Critical,
}

pub fn robustness_band(r: f64) -> RobustnessBand {
    if r >= BAND_HIGH {
        RobustnessBand::High
    } else if r >= BAND_MEDIUM {
        RobustnessBand::Medium
    } else {
        RobustnessBand::Critical
    }
}
