mod common;

use std::collections::HashSet;

use bench_core::ingest::{
    aq10_screen_score, deduplicate, load_csv, make_fold_plan, read_csv, CohortDataset, CohortId,
};
use bench_core::{BenchError, Matrix};
use common::{synthetic_cohort, write_csv};
use proptest::prelude::*;

fn dataset(bits: &[(u16, u8)]) -> CohortDataset {
    let rows: Vec<Vec<f64>> = bits
        .iter()
        .map(|(b, _)| (0..10).map(|j| ((b >> j) & 1) as f64).collect())
        .collect();
    let labels = bits.iter().map(|(_, y)| *y).collect();
    CohortDataset::new(
        CohortId::Child,
        Matrix::from_rows(&rows).unwrap(),
        labels,
        None,
    )
    .unwrap()
}

fn labelled_rows() -> impl Strategy<Value = Vec<(u16, u8)>> {
    prop::collection::vec((0u16..1024, 0u8..=1), 12..300).prop_filter("both classes, 5 each", |v| {
        let pos = v.iter().filter(|(_, y)| *y == 1).count();
        pos >= 5 && v.len() - pos >= 5
    })
}

#[test]
fn full_size_cohort_test_split() {
    let ds = synthetic_cohort(CohortId::Adult, 4068, 6, 0.05, 1);
    let plan = make_fold_plan(&ds, 42, 0.2, 5).unwrap();
    assert_eq!(plan.test_indices.len(), 813);
    assert_eq!(plan.train_indices.len(), 4068 - 813);
}

#[test]
fn csv_round_trip_and_extra_columns() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic_cohort(CohortId::Adolescent, 50, 6, 0.0, 3);
    let path = dir.path().join("adolescent.csv");
    write_csv(&ds, &path);
    let back = load_csv(&path, CohortId::Adolescent).unwrap();
    assert_eq!(back.features(), ds.features());
    assert_eq!(back.labels(), ds.labels());

    let text = "age,A1,A2,A3,A4,A5,A6,A7,A8,A9,A10,gender,class,source\n\
                12,1,1,1,1,1,1,1,1,1,1,m,1,v2\n\
                14,0,0,0,0,0,0,0,0,0,0,f,0,v3\n";
    let ds = read_csv(text.as_bytes(), CohortId::Child).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.source_tags()[1].as_deref(), Some("v3"));
}

#[test]
fn csv_errors_name_the_problem() {
    let missing = "A1,A2,A3,A4,A5,A6,A7,A8,A9,class\n1,1,1,1,1,1,1,1,1,1\n";
    assert!(matches!(
        read_csv(missing.as_bytes(), CohortId::Adult),
        Err(BenchError::MissingColumn(c)) if c == "A10"
    ));
    let bad =
        "A1,A2,A3,A4,A5,A6,A7,A8,A9,A10,class\n1,1,1,1,1,1,1,1,1,2,1\n0,0,0,0,0,0,0,0,0,0,0\n";
    assert!(matches!(
        read_csv(bad.as_bytes(), CohortId::Adult),
        Err(BenchError::NonBinary { row: 1, .. })
    ));
    let one_class = "A1,A2,A3,A4,A5,A6,A7,A8,A9,A10,class\n1,1,1,1,1,1,1,1,1,1,1\n";
    assert!(matches!(
        read_csv(one_class.as_bytes(), CohortId::Adult),
        Err(BenchError::SingleClass(1))
    ));
    assert!(load_csv("/nonexistent/x.csv", CohortId::Adult).is_err());
}

#[test]
fn screen_threshold() {
    let mut row = [0.0; 10];
    for item in row.iter_mut().take(5) {
        *item = 1.0;
    }
    assert_eq!(aq10_screen_score(&row).unwrap(), (5, false));
    row[5] = 1.0;
    assert_eq!(aq10_screen_score(&row).unwrap(), (6, true));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fold_plan_invariants(rows in labelled_rows(), seed in any::<u64>()) {
        let ds = dataset(&rows);
        let n = ds.len();
        let plan = make_fold_plan(&ds, seed, 0.2, 5).unwrap();

        let test: HashSet<usize> = plan.test_indices.iter().copied().collect();
        let train: HashSet<usize> = plan.train_indices.iter().copied().collect();
        prop_assert!(test.is_disjoint(&train));
        prop_assert_eq!(test.len() + train.len(), n);
        prop_assert_eq!(plan.test_indices.len(), (0.2 * n as f64 + 1e-9).floor() as usize);

        let mut seen = HashSet::new();
        for f in &plan.folds {
            prop_assert!(f.windows(2).all(|w| w[0] < w[1]));
            for &i in f {
                prop_assert!(train.contains(&i));
                prop_assert!(seen.insert(i));
            }
        }
        prop_assert_eq!(seen.len(), train.len());

        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for class in 0..=1u8 {
            let per: Vec<usize> = plan
                .folds
                .iter()
                .map(|f| f.iter().filter(|&&i| ds.labels()[i] == class).count())
                .collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }

        let test_pos = plan.test_indices.iter().filter(|&&i| ds.labels()[i] == 1).count();
        prop_assert!(test_pos >= 1 && test_pos < plan.test_indices.len());
        let expected = (plan.test_indices.len() as f64 * ds.positives() as f64 / n as f64).round() as usize;
        prop_assert!(test_pos.abs_diff(expected) <= 1);

        for k in 0..5 {
            let comp = plan.fold_complement(k);
            prop_assert_eq!(comp.len() + plan.folds[k].len(), train.len());
        }
        prop_assert_eq!(&plan, &make_fold_plan(&ds, seed, 0.2, 5).unwrap());
    }

    #[test]
    fn dedup_properties(rows in labelled_rows()) {
        let ds = dataset(&rows);
        let d = deduplicate(&ds).unwrap();
        let unique: HashSet<(u16, u8)> = rows.iter().copied().collect();
        prop_assert_eq!(d.dataset.len(), unique.len());
        prop_assert_eq!(d.removed, rows.len() - unique.len());

        // first occurrences, original order
        let mut seen = HashSet::new();
        let firsts: Vec<(u16, u8)> = rows.iter().copied().filter(|r| seen.insert(*r)).collect();
        let expected = dataset(&firsts);
        prop_assert_eq!(d.dataset.features(), expected.features());
        prop_assert_eq!(d.dataset.labels(), expected.labels());

        let again = deduplicate(&d.dataset).unwrap();
        prop_assert_eq!(again.removed, 0);

        let by_features: HashSet<u16> = unique.iter().map(|(b, _)| *b).collect();
        prop_assert_eq!(d.label_conflicts, unique.len() - by_features.len());
    }
}
