//! Discrimination and calibration metrics over positive-class probabilities.
//!
//! Conventions used throughout:
//! - a sample is predicted positive iff `p >= threshold` (default 0.5)
//! - confidence is `max(p, 1 - p)`
//! - ECE bins are equal-width over confidence in `[0.5, 1.0]`, the last bin
//!   closed on the right
//! - entropy is binary entropy in bits, `0 * log 0 = 0`
//! - standard deviations are population (divide by n)

use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_ECE_BINS: usize = 10;
pub const MAX_ECE_BINS: usize = 50;

/// ECE above which a model is treated as calibration-critical.
pub const ECE_CRITICAL: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_inputs(probs: &[f64], labels: &[u8]) -> Result<()> {
    if probs.is_empty() {
        return Err(BenchError::Empty);
    }
    if probs.len() != labels.len() {
        return Err(BenchError::LengthMismatch {
            expected: labels.len(),
            got: probs.len(),
        });
    }
    check_probs(probs)
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(BenchError::Empty);
    }
    match probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(i) => Err(BenchError::invalid(format!(
            "probability {} at index {i} outside [0,1]",
            probs[i]
        ))),
        None => Ok(()),
    }
}

#[inline]
pub fn predicted_positive(p: f64, threshold: f64) -> bool {
    p >= threshold
}

pub fn confusion(probs: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionMatrix> {
    check_inputs(probs, labels)?;
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in probs.iter().zip(labels) {
        match (predicted_positive(p, threshold), y == 1) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Fraction of samples whose thresholded prediction equals the label.
pub fn accuracy(probs: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    let cm = confusion(probs, labels, threshold)?;
    Ok((cm.tp + cm.tn) as f64 / cm.total() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegenerateFlags {
    /// tp + fp = 0
    pub precision: bool,
    /// tp + fn = 0
    pub recall: bool,
    /// precision + recall = 0
    pub f1: bool,
}

impl DegenerateFlags {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: DegenerateFlags,
}

/// Accuracy, precision, recall and F1. Zero denominators yield 0 and set
/// the matching degenerate flag.
pub fn basic_metrics(cm: &ConfusionMatrix) -> Result<BasicMetrics> {
    let n = cm.total();
    if n == 0 {
        return Err(BenchError::Empty);
    }
    let mut flags = DegenerateFlags::default();
    let ratio = |num: u64, den: u64, flag: &mut bool| {
        if den == 0 {
            *flag = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(cm.tp, cm.tp + cm.fp, &mut flags.precision);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, &mut flags.recall);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        flags.f1 = true;
        0.0
    };
    Ok(BasicMetrics {
        accuracy: (cm.tp + cm.tn) as f64 / n as f64,
        precision,
        recall,
        f1,
        degenerate: flags,
    })
}

/// Area under the ROC curve via the Mann-Whitney rank sum, ties averaged.
pub fn auc_roc(probs: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(probs, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(BenchError::SingleClass(0));
    }
    if n_neg == 0 {
        return Err(BenchError::SingleClass(1));
    }

    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));

    // Twice the rank sum keeps averaged ranks integral.
    let mut twice_rank_sum_pos: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && probs[order[end]] == probs[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end; twice their mean = start + end + 1
        let twice_avg = (start + end + 1) as u64;
        let pos_in_group = order[start..end]
            .iter()
            .filter(|&&i| labels[i] == 1)
            .count() as u64;
        twice_rank_sum_pos += twice_avg * pos_in_group;
        start = end;
    }
    let n_pos = n_pos as u64;
    let twice_u = twice_rank_sum_pos - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg as u64) as f64)
}

#[inline]
pub fn confidence(p: f64) -> f64 {
    p.max(1.0 - p)
}

/// Index of the confidence bin holding `c` among `bins` equal-width bins
/// over `[0.5, 1.0]`.
fn confidence_bin(c: f64, bins: usize) -> usize {
    let width = 0.5 / bins as f64;
    let lower = |m: usize| 0.5 + m as f64 * width;
    let mut m = (((c - 0.5) / width).floor().max(0.0) as usize).min(bins - 1);
    // Agree exactly with the edge comparisons lower(m) <= c < lower(m + 1).
    while m > 0 && c < lower(m) {
        m -= 1;
    }
    while m + 1 < bins && c >= lower(m + 1) {
        m += 1;
    }
    m
}

/// Expected calibration error: bin-mass-weighted |accuracy - confidence|.
pub fn ece(probs: &[f64], labels: &[u8], bins: usize) -> Result<f64> {
    check_inputs(probs, labels)?;
    if bins == 0 {
        return Err(BenchError::invalid("ece needs at least one bin"));
    }
    let mut count = vec![0usize; bins];
    let mut correct = vec![0usize; bins];
    let mut conf_sum = vec![0.0f64; bins];
    for (&p, &y) in probs.iter().zip(labels) {
        let c = confidence(p);
        let m = confidence_bin(c, bins);
        count[m] += 1;
        conf_sum[m] += c;
        if predicted_positive(p, DEFAULT_THRESHOLD) == (y == 1) {
            correct[m] += 1;
        }
    }
    let n = probs.len() as f64;
    let mut total = 0.0;
    for m in 0..bins {
        if count[m] == 0 {
            continue;
        }
        let size = count[m] as f64;
        let gap = (correct[m] as f64 / size - conf_sum[m] / size).abs();
        total += size / n * gap;
    }
    Ok(total)
}

/// Mean squared difference between P(positive) and the label.
pub fn brier(probs: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(probs, labels)?;
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| (p - f64::from(y)).powi(2))
        .sum();
    Ok(sum / probs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceStats {
    pub mean_confidence: f64,
    pub std_confidence: f64,
}

pub fn confidence_stats(probs: &[f64]) -> Result<ConfidenceStats> {
    check_probs(probs)?;
    let n = probs.len() as f64;
    let mean = probs.iter().map(|&p| confidence(p)).sum::<f64>() / n;
    let var = probs
        .iter()
        .map(|&p| (confidence(p) - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(ConfidenceStats {
        mean_confidence: mean,
        std_confidence: var.sqrt(),
    })
}

pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Mean binary entropy in bits.
pub fn mean_entropy(probs: &[f64]) -> Result<f64> {
    check_probs(probs)?;
    Ok(probs.iter().map(|&p| binary_entropy(p)).sum::<f64>() / probs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub brier: f64,
    pub mean_confidence: f64,
    pub std_confidence: f64,
    pub mean_entropy: f64,
    pub bins: usize,
}

pub fn calibration_report(probs: &[f64], labels: &[u8], bins: usize) -> Result<CalibrationReport> {
    let stats = confidence_stats(probs)?;
    Ok(CalibrationReport {
        ece: ece(probs, labels, bins)?,
        brier: brier(probs, labels)?,
        mean_confidence: stats.mean_confidence,
        std_confidence: stats.std_confidence,
        mean_entropy: mean_entropy(probs)?,
        bins,
    })
}
