use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::hap::{fold_cost, hap_score, PenaltyWeights};
use crate::metrics::basic_metrics;
use crate::{BenchError, Result, FEATURE_NAMES};

use super::record::{BenchReport, EvalRecord};

pub const REPORT_FILES: [&str; 6] = [
    "report.json",
    "metrics.csv",
    "importance.csv",
    "robustness.csv",
    "hap.csv",
    "recommendations.md",
];

/// Checks that stored derived values agree with the raw counts they came
/// from: HAP from fold costs, fold costs from fold confusions, F1 from the
/// held-out confusion matrix. Comparisons are exact.
pub fn check_consistency(report: &BenchReport) -> Result<()> {
    let w: PenaltyWeights = report.settings.weights;
    for r in &report.records {
        let who = format!("{} / {}", r.model_id, r.cohort);
        let fail = |m: String| {
            Err(BenchError::invalid(format!(
                "inconsistent record {who}: {m}"
            )))
        };
        if let Some(h) = &r.hap {
            if h.fold_costs.len() != r.fold_confusions.len() {
                return fail("fold cost count differs from fold confusion count".into());
            }
            for (k, (c, cm)) in h.fold_costs.iter().zip(&r.fold_confusions).enumerate() {
                if fold_cost(cm, &w)? != *c {
                    return fail(format!("fold {k} cost does not match its confusion matrix"));
                }
            }
            let again = hap_score(&h.fold_costs, h.lambda)?;
            if again.hap != h.hap
                || again.mean_cost != h.mean_cost
                || again.cost_variance != h.cost_variance
            {
                return fail("HAP does not reconstruct from fold costs".into());
            }
        }
        if let Some(h) = &r.hap_auto {
            if hap_score(&h.fold_costs, h.lambda)?.hap != h.hap {
                return fail("auto-lambda HAP does not reconstruct from fold costs".into());
            }
        }
        if let (Some(cm), Some(p)) = (&r.confusion, &r.performance) {
            if basic_metrics(cm)?.f1 != p.f1 {
                return fail("F1 does not match the stored confusion matrix".into());
            }
        }
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(Into::into)
}

fn metric_rows(r: &EvalRecord) -> Vec<(&'static str, f64)> {
    let mut rows = Vec::new();
    if let Some(p) = &r.performance {
        rows.extend([
            ("accuracy", p.accuracy),
            ("precision", p.precision),
            ("recall", p.recall),
            ("f1", p.f1),
            ("auc", p.auc),
        ]);
    }
    if let Some(c) = &r.calibration {
        rows.extend([
            ("ece", c.ece),
            ("brier", c.brier),
            ("mean_confidence", c.mean_confidence),
            ("std_confidence", c.std_confidence),
            ("mean_entropy", c.mean_entropy),
        ]);
    }
    if let Some(rb) = &r.robustness {
        rows.push(("clean_accuracy", rb.clean_accuracy));
        rows.push(("composite_r", rb.composite_r));
    }
    if let Some(h) = &r.hap {
        rows.extend([
            ("hap_mean_cost", h.mean_cost),
            ("hap_cost_variance", h.cost_variance),
            ("hap", h.hap),
        ]);
    }
    if let Some(h) = &r.hap_auto {
        rows.push(("hap_at_lambda_star", h.hap));
    }
    if let Some(f) = &r.flags {
        rows.push((
            "calibration_critical",
            f64::from(u8::from(f.calibration_critical)),
        ));
    }
    rows
}

fn write_metrics(report: &BenchReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["cohort", "model_id", "metric", "value"])?;
    for r in &report.records {
        for (name, v) in metric_rows(r) {
            w.write_record([r.cohort.as_str(), &r.model_id, name, &v.to_string()])?;
        }
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn write_importance(report: &BenchReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["cohort", "model_id"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    let row = |cohort: &str, id: &str, scores: &[f64]| {
        let mut v = vec![cohort.to_string(), id.to_string()];
        v.extend(scores.iter().map(f64::to_string));
        v
    };
    for r in &report.records {
        if let Some(imp) = &r.importance {
            w.write_record(row(r.cohort.as_str(), &r.model_id, &imp.scores))?;
        }
    }
    for c in &report.cohorts {
        if let Some(cons) = &c.consensus {
            w.write_record(row(c.cohort.as_str(), "consensus", &cons.consensus))?;
        }
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn write_robustness(report: &BenchReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "model",
        "cohort",
        "protocol",
        "level",
        "clean_acc",
        "perturbed_acc",
        "delta",
    ])?;
    for r in &report.records {
        let Some(rb) = &r.robustness else { continue };
        for c in &rb.per_condition {
            w.write_record([
                r.model_id.as_str(),
                r.cohort.as_str(),
                c.spec.protocol.as_str(),
                &c.spec.level.to_string(),
                &rb.clean_accuracy.to_string(),
                &c.perturbed_accuracy.to_string(),
                &c.delta_acc.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn write_hap(report: &BenchReport, path: &Path) -> Result<()> {
    let k = report.settings.folds;
    let mut w = csv_writer(path)?;
    let mut header = vec!["cohort".to_string(), "model_id".to_string()];
    header.extend((1..=k).map(|i| format!("fold_{i}")));
    header.extend(
        [
            "mean_cost",
            "cost_variance",
            "lambda",
            "hap",
            "lambda_star",
            "hap_at_lambda_star",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in &report.records {
        let Some(h) = &r.hap else { continue };
        let star = report
            .cohort(r.cohort)
            .and_then(|c| c.snr.as_ref())
            .filter(|s| s.model_ids.contains(&r.model_id))
            .map(|s| s.curve.lambda_star);
        let mut row = vec![r.cohort.as_str().to_string(), r.model_id.clone()];
        row.extend(h.fold_costs.iter().map(f64::to_string));
        row.extend([h.mean_cost, h.cost_variance, h.lambda, h.hap].map(|v| v.to_string()));
        row.push(star.map(|v| v.to_string()).unwrap_or_default());
        row.push(star.map(|l| h.at_lambda(l).to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn fmt3(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

pub fn render_recommendations(report: &BenchReport) -> String {
    let mut s = String::from("# Deployment recommendations\n\n");
    s.push_str("| Cohort | Setting | Model | F1 | AUC | ECE | R | Note |\n");
    s.push_str("|---|---|---|---|---|---|---|---|\n");
    for rec in &report.recommendations {
        let r = report.record(rec.cohort, &rec.model_id);
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            rec.cohort,
            rec.setting.as_str(),
            rec.model_id,
            fmt3(r.and_then(EvalRecord::f1)),
            fmt3(r.and_then(EvalRecord::auc)),
            fmt3(r.and_then(EvalRecord::ece)),
            fmt3(r.and_then(EvalRecord::composite_r)),
            rec.warning.as_deref().unwrap_or(""),
        );
    }
    s.push_str(
        "\nCandidates must have ECE <= 0.12. General: highest F1 (then AUC, then lower HAP). \
         Noisy: highest composite R among candidates with F1 >= 0.9 x the best candidate F1.\n",
    );
    let critical: Vec<&EvalRecord> = report
        .records
        .iter()
        .filter(|r| r.flags.is_some_and(|f| f.calibration_critical))
        .collect();
    if !critical.is_empty() {
        s.push_str("\n## Calibration-critical (excluded)\n\n");
        for r in critical {
            let _ = writeln!(s, "- {} / {}: ECE {}", r.cohort, r.model_id, fmt3(r.ece()));
        }
    }
    let failed: Vec<&EvalRecord> = report
        .records
        .iter()
        .filter(|r| r.error.is_some())
        .collect();
    if !failed.is_empty() {
        s.push_str("\n## Failed evaluations\n\n");
        for r in failed {
            let _ = writeln!(
                s,
                "- {} / {}: {}",
                r.cohort,
                r.model_id,
                r.error.as_deref().unwrap_or_default()
            );
        }
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Writes all report files into `dir` (created if needed) and returns
/// their paths, in [`REPORT_FILES`] order.
pub fn emit_reports(report: &BenchReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    check_consistency(report)?;
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let paths: Vec<PathBuf> = REPORT_FILES.iter().map(|f| dir.join(f)).collect();

    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write_text(&paths[0], &json)?;
    write_metrics(report, &paths[1])?;
    write_importance(report, &paths[2])?;
    write_robustness(report, &paths[3])?;
    write_hap(report, &paths[4])?;
    write_text(&paths[5], &render_recommendations(report))?;
    Ok(paths)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<BenchReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
