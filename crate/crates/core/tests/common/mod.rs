//! Shared fixtures and independent reference implementations for the
//! integration tests and the acceptance harness.
#![allow(dead_code)]

use bench_core::ingest::{CohortDataset, CohortId};
use bench_core::rng::SplitMix64;
use bench_core::Matrix;

/// AQ-10 style cohort: ten fair coin items, label = (score >= cut) with
/// each label flipped independently with probability `label_noise`.
pub fn synthetic_cohort(
    cohort: CohortId,
    n: usize,
    cut: usize,
    label_noise: f64,
    seed: u64,
) -> CohortDataset {
    let mut rng = SplitMix64::new(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..10)
            .map(|_| (rng.next_f64() < 0.5) as u8 as f64)
            .collect();
        let score = row.iter().filter(|&&v| v == 1.0).count();
        let mut y = (score >= cut) as u8;
        if rng.next_f64() < label_noise {
            y = 1 - y;
        }
        rows.push(row);
        labels.push(y);
    }
    CohortDataset::new(cohort, Matrix::from_rows(&rows).unwrap(), labels, None).unwrap()
}

pub fn write_csv(ds: &CohortDataset, path: &std::path::Path) {
    let mut s = String::from("A1,A2,A3,A4,A5,A6,A7,A8,A9,A10,class\n");
    for (row, y) in ds.features().rows().zip(ds.labels()) {
        for v in row {
            s.push_str(if *v == 1.0 { "1," } else { "0," });
        }
        s.push_str(&format!("{y}\n"));
    }
    std::fs::write(path, s).unwrap();
}

/// Random probability/label instance with both classes present and a
/// share of exactly repeated scores.
pub fn random_scores(rng: &mut SplitMix64, n: usize) -> (Vec<f64>, Vec<u8>) {
    loop {
        let probs: Vec<f64> = (0..n)
            .map(|_| match rng.below(4) {
                0 => rng.below(5) as f64 / 4.0,
                _ => rng.next_f64(),
            })
            .collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        let pos = labels.iter().filter(|&&y| y == 1).count();
        if pos > 0 && pos < n {
            return (probs, labels);
        }
    }
}

pub fn oracle_auc(probs: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in probs.iter().enumerate() {
        for (j, &pj) in probs.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if pi > pj {
                    wins += 1.0;
                } else if pi == pj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// ECE by explicit edge comparisons over `[0.5, 1]`.
pub fn oracle_ece(probs: &[f64], labels: &[u8], bins: usize) -> f64 {
    let width = 0.5 / bins as f64;
    let mut total = 0.0;
    for m in 0..bins {
        let lo = 0.5 + m as f64 * width;
        let hi = 0.5 + (m + 1) as f64 * width;
        let members: Vec<usize> = (0..probs.len())
            .filter(|&i| {
                let c = if probs[i] >= 0.5 {
                    probs[i]
                } else {
                    1.0 - probs[i]
                };
                c >= lo && (c < hi || m == bins - 1)
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let k = members.len() as f64;
        let acc = members
            .iter()
            .filter(|&&i| (probs[i] >= 0.5) == (labels[i] == 1))
            .count() as f64
            / k;
        let conf = members
            .iter()
            .map(|&i| {
                if probs[i] >= 0.5 {
                    probs[i]
                } else {
                    1.0 - probs[i]
                }
            })
            .sum::<f64>()
            / k;
        total += k / probs.len() as f64 * (acc - conf).abs();
    }
    total
}

pub fn oracle_brier(probs: &[f64], labels: &[u8]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| (p - y as f64) * (p - y as f64))
        .sum::<f64>()
        / probs.len() as f64
}

/// F1 as 2TP / (2TP + FP + FN), 0 when undefined.
pub fn oracle_f1(probs: &[f64], labels: &[u8]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= 0.5, y == 1) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        0.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fn_)
    }
}

/// Population variance by the textbook two-pass formula.
pub fn oracle_var(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn oracle_snr(lambda: f64, mus: &[f64], vars: &[f64]) -> f64 {
    let h: Vec<f64> = mus.iter().zip(vars).map(|(m, v)| m + lambda * v).collect();
    let n = h.len();
    let mut gaps = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            gaps += (h[i] - h[j]).abs();
        }
    }
    let s = gaps / (n * (n - 1) / 2) as f64;
    s / oracle_var(&h).sqrt()
}

/// Dense-grid argmax of the exact SNR (first maximum wins).
pub fn grid_argmax(mus: &[f64], vars: &[f64], hi: f64, step: f64) -> f64 {
    let steps = (hi / step).round() as usize;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=steps {
        let l = i as f64 * step;
        let s = oracle_snr(l, mus, vars);
        if s > best.1 {
            best = (l, s);
        }
    }
    best.0
}

/// Kendall's W from rank sums, ranks by pairwise counting, with the
/// standard tie correction.
pub fn oracle_kendall_w(values: &[Vec<f64>]) -> f64 {
    let m = values.len() as f64;
    let n = values[0].len();
    let mut rank_sums = vec![0.0; n];
    let mut ties = 0.0;
    for row in values {
        for i in 0..n {
            let less = row.iter().filter(|&&v| v < row[i]).count() as f64;
            let equal = row.iter().filter(|&&v| v == row[i]).count() as f64;
            rank_sums[i] += less + (equal + 1.0) / 2.0;
        }
        let mut seen = vec![false; n];
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let group: Vec<usize> = (i..n).filter(|&j| row[j] == row[i]).collect();
            for &j in &group {
                seen[j] = true;
            }
            let t = group.len() as f64;
            ties += t * t * t - t;
        }
    }
    let mean = rank_sums.iter().sum::<f64>() / n as f64;
    let s: f64 = rank_sums.iter().map(|r| (r - mean) * (r - mean)).sum();
    let nf = n as f64;
    let den = m * m * (nf * nf * nf - nf) - m * ties;
    if den <= 0.0 {
        1.0
    } else {
        12.0 * s / den
    }
}

/// Random (mu, sigma^2) ensemble: mu ~ U(0,1), sigma^2 ~ U(0, 0.05).
pub fn random_ensemble(rng: &mut SplitMix64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mus = (0..n).map(|_| rng.next_f64()).collect();
    let vars = (0..n).map(|_| 0.05 * rng.next_f64()).collect();
    (mus, vars)
}

/// Margin-sensitive instance: distinct binary vertices with item sum 4
/// (label 0) or 5 (label 1). Returns the test matrix and labels, a steep
/// logistic model whose decision boundary sits at sum 4.5, and a 5-NN
/// trained on five copies of every test vertex.
pub fn margin_instance(
    n: usize,
    seed: u64,
) -> (
    Matrix,
    Vec<u8>,
    bench_core::modelhost::LogisticRegression,
    bench_core::modelhost::Knn,
) {
    use std::collections::HashSet;
    let mut rng = SplitMix64::new(seed);
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    while rows.len() < n {
        let target = 4 + (rows.len() % 2);
        let mut row = [0.0; 10];
        let mut idx: Vec<usize> = (0..10).collect();
        rng.shuffle(&mut idx);
        for &j in &idx[..target] {
            row[j] = 1.0;
        }
        let key: Vec<u8> = row.iter().map(|&v| v as u8).collect();
        if seen.insert(key) {
            rows.push(row.to_vec());
            labels.push((target == 5) as u8);
        }
    }
    let x = Matrix::from_rows(&rows).unwrap();
    let lr = bench_core::modelhost::LogisticRegression::from_parameters(vec![20.0; 10], -90.0);
    let mut train_rows = Vec::new();
    let mut train_y = Vec::new();
    for (r, &y) in rows.iter().zip(&labels) {
        for _ in 0..5 {
            train_rows.push(r.clone());
            train_y.push(y);
        }
    }
    let knn =
        bench_core::modelhost::Knn::fit(&Matrix::from_rows(&train_rows).unwrap(), &train_y, 5)
            .unwrap();
    (x, labels, lr, knn)
}
