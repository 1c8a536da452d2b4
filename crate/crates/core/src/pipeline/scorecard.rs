//! Normalized four-axis scorecard and deployment recommendations.
//!
//! Recommendation rule, per cohort:
//!
//! - candidates are the complete records with ECE <= 0.12;
//! - `general`: highest F1, then higher AUC, then lower HAP;
//! - `noisy`: among candidates whose F1 is at least 0.9 x the best
//!   candidate F1, highest composite R, then lower ECE;
//! - no candidates: highest F1 overall, with a calibration warning.
//!
//! Remaining ties go to the lexicographically smaller model id.

use std::cmp::Ordering;

use crate::ingest::CohortId;
use crate::metrics::ECE_CRITICAL;
use crate::{BenchError, Result};

use super::record::{EvalRecord, Recommendation, ScorecardEntry, Setting};

pub const NOISY_F1_FLOOR: f64 = 0.9;

pub fn build_scorecard(records: &[EvalRecord]) -> Vec<ScorecardEntry> {
    records
        .iter()
        .filter(|r| r.is_complete())
        .map(|r| {
            let perf = r.performance.expect("complete record");
            let raw = r.composite_r().expect("complete record");
            ScorecardEntry {
                model_id: r.model_id.clone(),
                cohort: r.cohort,
                f1: perf.f1,
                auc: perf.auc,
                calibration: (1.0 - r.ece().expect("complete record")).clamp(0.0, 1.0),
                robustness: raw.clamp(0.0, 1.0),
                robustness_raw: raw,
            }
        })
        .collect()
}

fn desc(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

fn asc(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

fn general_order(a: &EvalRecord, b: &EvalRecord) -> Ordering {
    let v = |r: &EvalRecord| {
        (
            r.f1().unwrap_or(0.0),
            r.auc().unwrap_or(0.0),
            r.ranking_hap().unwrap_or(f64::INFINITY),
        )
    };
    let (fa, aa, ha) = v(a);
    let (fb, ab, hb) = v(b);
    desc(fa, fb)
        .then(desc(aa, ab))
        .then(asc(ha, hb))
        .then(a.model_id.cmp(&b.model_id))
}

fn noisy_order(a: &EvalRecord, b: &EvalRecord) -> Ordering {
    let v = |r: &EvalRecord| {
        (
            r.composite_r().unwrap_or(f64::NEG_INFINITY),
            r.ece().unwrap_or(1.0),
        )
    };
    let (ra, ea) = v(a);
    let (rb, eb) = v(b);
    desc(ra, rb)
        .then(asc(ea, eb))
        .then(a.model_id.cmp(&b.model_id))
}

fn best_by<'a>(
    set: &[&'a EvalRecord],
    ord: fn(&EvalRecord, &EvalRecord) -> Ordering,
) -> &'a EvalRecord {
    set.iter()
        .copied()
        .min_by(|a, b| ord(a, b))
        .expect("non-empty")
}

pub fn recommend(
    records: &[EvalRecord],
    cohort: CohortId,
    setting: Setting,
) -> Result<Recommendation> {
    let pool: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| r.cohort == cohort && r.is_complete())
        .collect();
    if pool.is_empty() {
        return Err(BenchError::invalid(format!(
            "no complete records for cohort {cohort}"
        )));
    }
    let safe: Vec<&EvalRecord> = pool
        .iter()
        .copied()
        .filter(|r| r.ece().is_some_and(|e| e <= ECE_CRITICAL))
        .collect();
    let pick = |r: &EvalRecord, warning: Option<String>| Recommendation {
        cohort,
        setting,
        model_id: r.model_id.clone(),
        warning,
    };

    if safe.is_empty() {
        let r = best_by(&pool, general_order);
        return Ok(pick(
            r,
            Some(format!(
                "no calibration-safe model (all ECE > {ECE_CRITICAL}); best F1 shown"
            )),
        ));
    }
    match setting {
        Setting::General => Ok(pick(best_by(&safe, general_order), None)),
        Setting::Noisy => {
            let best_f1 = safe
                .iter()
                .filter_map(|r| r.f1())
                .fold(f64::NEG_INFINITY, f64::max);
            let floor = NOISY_F1_FLOOR * best_f1;
            let eligible: Vec<&EvalRecord> = safe
                .iter()
                .copied()
                .filter(|r| r.f1().is_some_and(|f| f >= floor))
                .collect();
            Ok(pick(best_by(&eligible, noisy_order), None))
        }
    }
}
