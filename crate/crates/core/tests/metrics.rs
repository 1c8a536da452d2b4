mod common;

use bench_core::metrics::{
    auc_roc, basic_metrics, brier, calibration_report, confusion, ece, ConfusionMatrix,
};
use bench_core::rng::SplitMix64;
use common::{oracle_auc, oracle_brier, oracle_ece, oracle_f1, random_scores};
use proptest::prelude::*;

#[test]
fn random_instances_match_oracles() {
    let mut rng = SplitMix64::new(7);
    for case in 0..200 {
        let n = 2 + rng.below(49) as usize;
        let (p, y) = random_scores(&mut rng, n);
        assert_eq!(auc_roc(&p, &y).unwrap(), oracle_auc(&p, &y), "case {case}");
        for bins in [1, 5, 10, 15] {
            let d = (ece(&p, &y, bins).unwrap() - oracle_ece(&p, &y, bins)).abs();
            assert!(d <= 1e-12, "case {case} bins {bins}: {d}");
        }
        assert!((brier(&p, &y).unwrap() - oracle_brier(&p, &y)).abs() <= 1e-12);
        let cm = confusion(&p, &y, 0.5).unwrap();
        assert!((basic_metrics(&cm).unwrap().f1 - oracle_f1(&p, &y)).abs() <= 1e-12);
    }
}

#[test]
fn confidence_on_bin_edges() {
    // confidence exactly 0.55 sits at the lower edge of bin 1 with 10 bins
    let p = [0.55, 0.45, 1.0, 0.0];
    let y = [1, 0, 1, 1];
    assert!((ece(&p, &y, 10).unwrap() - oracle_ece(&p, &y, 10)).abs() <= 1e-15);
}

#[test]
fn perfect_and_inverted_rankings() {
    let p = [0.1, 0.2, 0.8, 0.9];
    assert_eq!(auc_roc(&p, &[0, 0, 1, 1]).unwrap(), 1.0);
    assert_eq!(auc_roc(&p, &[1, 1, 0, 0]).unwrap(), 0.0);
    assert_eq!(auc_roc(&[0.5; 4], &[1, 0, 1, 0]).unwrap(), 0.5);
}

#[test]
fn calibration_report_rejects_bad_input() {
    assert!(calibration_report(&[], &[], 10).is_err());
    assert!(calibration_report(&[0.2, 1.3], &[0, 1], 10).is_err());
    assert!(calibration_report(&[0.2, f64::NAN], &[0, 1], 10).is_err());
    assert!(calibration_report(&[0.2], &[0, 1], 10).is_err());
    assert!(calibration_report(&[0.2], &[0], 0).is_err());
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..=1.0, n),
            prop::collection::vec(0u8..=1, n),
        )
    })
}

proptest! {
    #[test]
    fn metric_ranges((p, y) in instance(), bins in 1usize..=50) {
        let e = ece(&p, &y, bins).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        let b = brier(&p, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        let r = calibration_report(&p, &y, bins).unwrap();
        prop_assert!((0.5..=1.0).contains(&r.mean_confidence));
        prop_assert!((0.0..=1.0).contains(&r.mean_entropy));
        let m = basic_metrics(&confusion(&p, &y, 0.5).unwrap()).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn auc_matches_pair_counting((p, y) in instance()) {
        let pos = y.iter().filter(|&&v| v == 1).count();
        prop_assume!(pos > 0 && pos < y.len());
        prop_assert_eq!(auc_roc(&p, &y).unwrap(), oracle_auc(&p, &y));
    }

    #[test]
    fn auc_invariant_under_monotone_transform((p, y) in instance()) {
        let pos = y.iter().filter(|&&v| v == 1).count();
        prop_assume!(pos > 0 && pos < y.len());
        let q: Vec<f64> = p.iter().map(|v| v * v).collect();
        prop_assert_eq!(auc_roc(&p, &y).unwrap(), auc_roc(&q, &y).unwrap());
    }

    #[test]
    fn confusion_counts_partition(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
        prop_assume!(tp + tn + fp + fn_ > 0);
        let cm = ConfusionMatrix::new(tp, tn, fp, fn_);
        let m = basic_metrics(&cm).unwrap();
        prop_assert!((m.accuracy - (tp + tn) as f64 / cm.total() as f64).abs() <= 1e-15);
        prop_assert_eq!(m.degenerate.precision, tp + fp == 0);
        prop_assert_eq!(m.degenerate.recall, tp + fn_ == 0);
    }
}
