//! Permutation importance and consensus ranking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metrics::{accuracy, DEFAULT_THRESHOLD};
use crate::modelhost::ProbModel;
use crate::rng::SplitMix64;
use crate::{BenchError, Matrix, Result};

pub const DEFAULT_REPEATS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub model_id: String,
    /// Non-negative, L1-normalized (uniform when `raw` has no positive mass).
    pub scores: Vec<f64>,
    /// Mean accuracy drop per feature; may be negative.
    pub raw: Vec<f64>,
    /// Set when `raw` had no positive mass and `scores` fell back to uniform.
    pub uniform_fallback: bool,
}

impl ImportanceVector {
    pub fn from_raw(model_id: impl Into<String>, raw: Vec<f64>) -> Self {
        let (scores, uniform_fallback) = normalize_importance(&raw);
        Self {
            model_id: model_id.into(),
            scores,
            raw,
            uniform_fallback,
        }
    }

    /// Index of the top feature, lower index on ties.
    pub fn top_feature(&self) -> usize {
        argmax_first(&self.scores)
    }
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = j;
        }
    }
    best
}

/// Mean accuracy drop when one column is shuffled, per column.
///
/// The shuffle of column `j` in repeat `r` is driven by
/// `SplitMix64::derive(seed, &[j, r])`, so any single score can be
/// recomputed alone.
pub fn permutation_importance(
    model: &mut dyn ProbModel,
    x: &Matrix,
    y: &[u8],
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if x.n_rows() < 2 {
        return Err(BenchError::invalid(
            "permutation importance needs at least 2 rows",
        ));
    }
    if repeats == 0 {
        return Err(BenchError::invalid("repeats must be positive"));
    }
    let base_probs = model
        .predict_proba(x)
        .map_err(|e| e.context("importance: baseline predictions"))?;
    let baseline = accuracy(&base_probs, y, DEFAULT_THRESHOLD)?;
    let mut raw = Vec::with_capacity(x.n_cols());
    for j in 0..x.n_cols() {
        let mut total_drop = 0.0;
        for r in 0..repeats {
            let mut column = x.column(j);
            SplitMix64::derive(seed, &[j as u64, r as u64]).shuffle(&mut column);
            let mut xp = x.clone();
            for (i, v) in column.into_iter().enumerate() {
                xp.set(i, j, v);
            }
            let probs = model
                .predict_proba(&xp)
                .map_err(|e| e.context(format!("importance: feature {j} repeat {r}")))?;
            total_drop += baseline - accuracy(&probs, y, DEFAULT_THRESHOLD)?;
        }
        raw.push(total_drop / repeats as f64);
    }
    Ok(raw)
}

/// Floors negatives at zero and L1-normalizes. Returns the uniform vector
/// and `true` when nothing positive remains.
pub fn normalize_importance(raw: &[f64]) -> (Vec<f64>, bool) {
    let floored: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = floored.iter().sum();
    if total > 0.0 {
        (floored.iter().map(|v| v / total).collect(), false)
    } else {
        let d = raw.len().max(1) as f64;
        (vec![1.0 / d; raw.len()], true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub consensus: Vec<f64>,
    /// Feature index -> number of models ranking it first.
    pub top_feature_votes: BTreeMap<usize, usize>,
    pub per_model: Vec<ImportanceVector>,
}

impl ConsensusReport {
    /// 1-based rank of each feature by consensus score (1 = most important,
    /// lower index first on ties).
    pub fn ranks(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.consensus.len()).collect();
        order.sort_by(|&a, &b| {
            self.consensus[b]
                .total_cmp(&self.consensus[a])
                .then(a.cmp(&b))
        });
        let mut ranks = vec![0; order.len()];
        for (r, &j) in order.iter().enumerate() {
            ranks[j] = r + 1;
        }
        ranks
    }
}

pub fn consensus(importances: &[ImportanceVector]) -> Result<ConsensusReport> {
    let first = importances
        .first()
        .ok_or_else(|| BenchError::invalid("consensus of zero models"))?;
    let d = first.scores.len();
    let mut sum = vec![0.0; d];
    let mut votes = BTreeMap::new();
    for v in importances {
        if v.scores.len() != d {
            return Err(BenchError::LengthMismatch {
                expected: d,
                got: v.scores.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(&v.scores) {
            *s += x;
        }
        *votes.entry(v.top_feature()).or_insert(0) += 1;
    }
    let n = importances.len() as f64;
    Ok(ConsensusReport {
        consensus: sum.into_iter().map(|s| s / n).collect(),
        top_feature_votes: votes,
        per_model: importances.to_vec(),
    })
}
