//! Cohort loading, exact-record deduplication and deterministic stratified
//! partitioning.
//!
//! Input CSV layout: a header row with columns `A1`..`A10` (0/1) and the
//! label column `class` (0/1). Optional `source` is kept as provenance;
//! `age`, `gender`, `ethnicity` and any other columns are ignored.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;
use crate::{BenchError, Matrix, Result, FEATURE_NAMES, N_FEATURES};

/// AQ-10 total at or above which a screen is flagged positive.
pub const SCREEN_THRESHOLD: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CohortId {
    Child,
    Adolescent,
    Adult,
}

impl CohortId {
    pub const ALL: [CohortId; 3] = [CohortId::Child, CohortId::Adolescent, CohortId::Adult];

    pub fn as_str(self) -> &'static str {
        match self {
            CohortId::Child => "child",
            CohortId::Adolescent => "adolescent",
            CohortId::Adult => "adult",
        }
    }
}

impl fmt::Display for CohortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CohortId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "child" => Ok(CohortId::Child),
            "adolescent" => Ok(CohortId::Adolescent),
            "adult" => Ok(CohortId::Adult),
            other => Err(BenchError::invalid(format!("unknown cohort `{other}`"))),
        }
    }
}

/// Labeled feature matrix for one age cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortDataset {
    cohort: CohortId,
    features: Matrix,
    labels: Vec<u8>,
    source_tags: Vec<Option<String>>,
}

impl CohortDataset {
    /// Validates shape, binary cells and labels, and that both classes occur.
    pub fn new(
        cohort: CohortId,
        features: Matrix,
        labels: Vec<u8>,
        source_tags: Option<Vec<Option<String>>>,
    ) -> Result<Self> {
        if features.n_rows() == 0 {
            return Err(BenchError::Empty);
        }
        if features.n_cols() != N_FEATURES {
            return Err(BenchError::LengthMismatch {
                expected: N_FEATURES,
                got: features.n_cols(),
            });
        }
        if labels.len() != features.n_rows() {
            return Err(BenchError::LengthMismatch {
                expected: features.n_rows(),
                got: labels.len(),
            });
        }
        for (i, row) in features.rows().enumerate() {
            if let Some(j) = row.iter().position(|&v| v != 0.0 && v != 1.0) {
                return Err(BenchError::NonBinary {
                    row: i + 1,
                    column: FEATURE_NAMES[j].to_string(),
                    value: row[j].to_string(),
                });
            }
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(BenchError::NonBinary {
                row: i + 1,
                column: "class".into(),
                value: labels[i].to_string(),
            });
        }
        check_both_classes(&labels)?;
        let source_tags = source_tags.unwrap_or_else(|| vec![None; labels.len()]);
        if source_tags.len() != labels.len() {
            return Err(BenchError::LengthMismatch {
                expected: labels.len(),
                got: source_tags.len(),
            });
        }
        Ok(Self {
            cohort,
            features,
            labels,
            source_tags,
        })
    }

    pub fn cohort(&self) -> CohortId {
        self.cohort
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn source_tags(&self) -> &[Option<String>] {
        &self.source_tags
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// Rows `indices` as a (features, labels) pair.
    pub fn subset(&self, indices: &[usize]) -> (Matrix, Vec<u8>) {
        let x = self.features.select_rows(indices);
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }
}

fn check_both_classes(labels: &[u8]) -> Result<()> {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if labels.is_empty() {
        Err(BenchError::Empty)
    } else if pos == 0 {
        Err(BenchError::SingleClass(0))
    } else if pos == labels.len() {
        Err(BenchError::SingleClass(1))
    } else {
        Ok(())
    }
}

fn parse_binary(raw: &str, row: usize, column: &str) -> Result<u8> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(BenchError::NonBinary {
            row,
            column: column.to_string(),
            value: other.to_string(),
        }),
    }
}

/// Loads a cohort CSV. Row order is preserved.
pub fn load_csv(path: impl AsRef<Path>, cohort: CohortId) -> Result<CohortDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_csv(file, cohort)
}

/// Same as [`load_csv`], from any reader.
pub fn read_csv<R: std::io::Read>(reader: R, cohort: CohortId) -> Result<CohortDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let mut feature_cols = [0usize; N_FEATURES];
    for (slot, name) in feature_cols.iter_mut().zip(FEATURE_NAMES) {
        *slot = find(name).ok_or_else(|| BenchError::MissingColumn(name.to_string()))?;
    }
    let label_col = find("class").ok_or_else(|| BenchError::MissingColumn("class".into()))?;
    let source_col = find("source");

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut tags = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        for (&c, name) in feature_cols.iter().zip(FEATURE_NAMES) {
            let v = parse_binary(record.get(c).unwrap_or(""), row, name)?;
            data.push(f64::from(v));
        }
        labels.push(parse_binary(
            record.get(label_col).unwrap_or(""),
            row,
            "class",
        )?);
        tags.push(
            source_col
                .and_then(|c| record.get(c))
                .filter(|s| !s.is_empty())
                .map(str::to_string),
        );
    }
    if labels.is_empty() {
        return Err(BenchError::Empty);
    }
    let features = Matrix::from_vec(labels.len(), N_FEATURES, data)?;
    CohortDataset::new(cohort, features, labels, Some(tags))
}

/// Outcome of [`deduplicate`].
#[derive(Debug, Clone)]
pub struct Deduplicated {
    pub dataset: CohortDataset,
    pub removed: usize,
    /// Distinct feature vectors that remain present with both labels.
    pub label_conflicts: usize,
}

fn row_key(row: &[f64], label: u8) -> (u16, u8) {
    let mut bits = 0u16;
    for (j, &v) in row.iter().enumerate() {
        if v != 0.0 {
            bits |= 1 << j;
        }
    }
    (bits, label)
}

/// Drops exact (features, label) duplicates, keeping the first occurrence.
/// Rows that agree on features but not on label are all kept.
pub fn deduplicate(ds: &CohortDataset) -> Result<Deduplicated> {
    let mut seen = HashSet::new();
    let mut keep = Vec::with_capacity(ds.len());
    for (i, row) in ds.features.rows().enumerate() {
        if seen.insert(row_key(row, ds.labels[i])) {
            keep.push(i);
        }
    }
    let removed = ds.len() - keep.len();

    let mut labels_by_features: HashMap<u16, u8> = HashMap::new();
    for &i in &keep {
        let (bits, y) = row_key(ds.features.row(i), ds.labels[i]);
        *labels_by_features.entry(bits).or_default() |= 1 << y;
    }
    let label_conflicts = labels_by_features.values().filter(|&&m| m == 0b11).count();
    if label_conflicts > 0 {
        log::warn!(
            "{}: {label_conflicts} feature vector(s) occur with both labels; kept",
            ds.cohort
        );
    }

    let (features, labels) = ds.subset(&keep);
    let tags = keep.iter().map(|&i| ds.source_tags[i].clone()).collect();
    let dataset = CohortDataset::new(ds.cohort, features, labels, Some(tags))?;
    Ok(Deduplicated {
        dataset,
        removed,
        label_conflicts,
    })
}

/// Held-out test set plus a stratified K-fold partition of the train side.
///
/// All index lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub test_indices: Vec<usize>,
    pub train_indices: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Train-side indices outside fold `k`.
    pub fn fold_complement(&self, k: usize) -> Vec<usize> {
        let held: HashSet<usize> = self.folds[k].iter().copied().collect();
        self.train_indices
            .iter()
            .copied()
            .filter(|i| !held.contains(i))
            .collect()
    }
}

/// Builds the deterministic stratified split.
///
/// The test set has `floor(test_frac * n)` rows; the positive share is that
/// size times the global prevalence, rounded half away from zero (and kept
/// to at least one row per class when the test set has two or more rows).
/// Within each class (negatives first, then positives) the row indices are
/// shuffled with [`SplitMix64`] seeded by `seed`; the leading rows of the
/// shuffle go to the test set and the rest are dealt round-robin to the
/// folds, the positives continuing from the fold where the negatives
/// stopped.
pub fn make_fold_plan(ds: &CohortDataset, seed: u64, test_frac: f64, k: usize) -> Result<FoldPlan> {
    if !(0.0..1.0).contains(&test_frac) {
        return Err(BenchError::invalid(format!(
            "test_frac {test_frac} not in [0,1)"
        )));
    }
    if k < 2 {
        return Err(BenchError::invalid(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let n = ds.len();
    if n < 2 * k {
        return Err(BenchError::invalid(format!(
            "{n} rows is too few for {k} folds"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in ds.labels.iter().enumerate() {
        by_class[y as usize].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < k {
            return Err(BenchError::ClassTooSmall {
                class: class as u8,
                count: members.len(),
                needed: k,
            });
        }
    }

    let n_test = (test_frac * n as f64 + 1e-9).floor() as usize;
    let m1 = by_class[1].len();
    let mut pos_test = (n_test as f64 * m1 as f64 / n as f64).round() as usize;
    if n_test >= 2 {
        pos_test = pos_test.clamp(1, n_test - 1);
    }
    pos_test = pos_test.min(m1 - 1);
    let neg_test = (n_test - pos_test).min(by_class[0].len() - 1);
    let test_counts = [neg_test, pos_test];

    let mut rng = SplitMix64::new(seed);
    let mut test = Vec::with_capacity(n_test);
    let mut folds = vec![Vec::new(); k];
    let mut next_fold = 0usize;
    for (class, members) in by_class.iter_mut().enumerate() {
        rng.shuffle(members);
        let (held_out, rest) = members.split_at(test_counts[class]);
        test.extend_from_slice(held_out);
        for &i in rest {
            folds[next_fold].push(i);
            next_fold = (next_fold + 1) % k;
        }
    }
    test.sort_unstable();
    for f in &mut folds {
        f.sort_unstable();
    }
    let mut train: Vec<usize> = folds.iter().flatten().copied().collect();
    train.sort_unstable();

    Ok(FoldPlan {
        seed,
        test_indices: test,
        train_indices: train,
        folds,
    })
}

/// AQ-10 total and screen flag (`total >= 6`) for one already-scored row.
pub fn aq10_screen_score(row: &[f64]) -> Result<(u8, bool)> {
    if row.len() != N_FEATURES {
        return Err(BenchError::LengthMismatch {
            expected: N_FEATURES,
            got: row.len(),
        });
    }
    let mut score = 0u8;
    for (j, &v) in row.iter().enumerate() {
        if v == 1.0 {
            score += 1;
        } else if v != 0.0 {
            return Err(BenchError::NonBinary {
                row: 0,
                column: FEATURE_NAMES[j].to_string(),
                value: v.to_string(),
            });
        }
    }
    Ok((score, score >= SCREEN_THRESHOLD))
}

/// Descriptive statistics reported by `bench validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub cohort: CohortId,
    pub rows_loaded: usize,
    pub duplicates_removed: usize,
    pub label_conflicts: usize,
    pub rows: usize,
    pub positives: usize,
    pub prevalence: f64,
    pub mean_aq10_score: f64,
    pub screen_positive_rate: f64,
    /// Fraction of rows where the AQ-10 screen flag equals the label.
    pub screen_label_agreement: f64,
}

pub fn summarize(loaded: &CohortDataset, dedup: &Deduplicated) -> DatasetSummary {
    let ds = &dedup.dataset;
    let mut total = 0usize;
    let mut flagged = 0usize;
    let mut agree = 0usize;
    for (row, &y) in ds.features.rows().zip(&ds.labels) {
        // rows were validated binary at construction
        let (score, flag) = aq10_screen_score(row).expect("validated row");
        total += score as usize;
        flagged += flag as usize;
        agree += (flag == (y == 1)) as usize;
    }
    let n = ds.len() as f64;
    DatasetSummary {
        cohort: ds.cohort,
        rows_loaded: loaded.len(),
        duplicates_removed: dedup.removed,
        label_conflicts: dedup.label_conflicts,
        rows: ds.len(),
        positives: ds.positives(),
        prevalence: ds.positives() as f64 / n,
        mean_aq10_score: total as f64 / n,
        screen_positive_rate: flagged as f64 / n,
        screen_label_agreement: agree as f64 / n,
    }
}
