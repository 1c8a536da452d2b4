use log::{info, warn};
use rayon::prelude::*;

use crate::hap::{
    fit_snr_curve, hap_from_folds, hap_score, sensitivity_sweep, snr, DEFAULT_LAMBDA_MAX,
};
use crate::ingest::{deduplicate, load_csv, make_fold_plan, summarize, CohortDataset, FoldPlan};
use crate::interpret::{consensus, permutation_importance, ImportanceVector};
use crate::metrics::{auc_roc, basic_metrics, calibration_report, confusion, DEFAULT_THRESHOLD};
use crate::modelhost::{fit, ModelSpec, ProbModel};
use crate::robustness::{evaluate_robustness, robustness_band};
use crate::{BenchError, Result};

use super::config::{LambdaMode, RunConfig};
use super::record::{
    calibration_critical, BenchReport, CohortAnalysis, CohortSnr, EvalRecord, PerformanceMetrics,
    RecordFlags, RunSettings, Setting,
};
use super::scorecard::{build_scorecard, recommend};

/// A cohort after loading, deduplication and partitioning.
#[derive(Debug, Clone)]
pub struct PreparedCohort {
    pub dataset: CohortDataset,
    pub plan: FoldPlan,
    pub analysis: CohortAnalysis,
}

pub fn prepare_cohort(dataset: CohortDataset, cfg: &RunConfig) -> Result<PreparedCohort> {
    let cohort = dataset.cohort();
    let dedup = deduplicate(&dataset)?;
    let summary = summarize(&dataset, &dedup);
    let plan = make_fold_plan(&dedup.dataset, cfg.seed, cfg.test_frac, cfg.folds)
        .map_err(|e| e.context(format!("cohort {cohort}")))?;
    let analysis = CohortAnalysis {
        cohort,
        dataset: summary,
        train_size: plan.train_indices.len(),
        test_size: plan.test_indices.len(),
        fold_sizes: plan.folds.iter().map(Vec::len).collect(),
        snr: None,
        sensitivity: None,
        consensus: None,
        notes: Vec::new(),
    };
    Ok(PreparedCohort {
        dataset: dedup.dataset,
        plan,
        analysis,
    })
}

/// Evaluates one (model, cohort) cell. Never fails: errors are stored on
/// the record, keeping whatever was computed before the failure.
pub fn evaluate_cell(spec: &ModelSpec, prepared: &PreparedCohort, cfg: &RunConfig) -> EvalRecord {
    let mut record = EvalRecord::new(&spec.model_id, prepared.dataset.cohort());
    if let Err(e) = fill_cell(&mut record, spec, prepared, cfg) {
        warn!("{} / {}: {e}", spec.model_id, record.cohort);
        record.error = Some(e.to_string());
    }
    record
}

fn fill_cell(
    record: &mut EvalRecord,
    spec: &ModelSpec,
    prepared: &PreparedCohort,
    cfg: &RunConfig,
) -> Result<()> {
    let ds = &prepared.dataset;
    let plan = &prepared.plan;
    let (x_train, y_train) = ds.subset(&plan.train_indices);
    let (x_test, y_test) = ds.subset(&plan.test_indices);

    let mut model = fit(spec, &x_train, &y_train, cfg.seed).map_err(|e| e.context("fit"))?;
    record.adapter_config = model.adapter_config().map(str::to_owned);
    let outcome = held_out_axes(record, &mut model, &x_test, &y_test, cfg);
    model.shutdown();
    outcome?;

    let mut folds = Vec::with_capacity(plan.k());
    for k in 0..plan.k() {
        let (xf, yf) = ds.subset(&plan.fold_complement(k));
        let (xv, yv) = ds.subset(&plan.folds[k]);
        let ctx = format!("cv fold {k}");
        let mut m = fit(spec, &xf, &yf, cfg.seed).map_err(|e| e.context(ctx.clone()))?;
        let probs = m.predict_proba(&xv).map_err(|e| e.context(ctx));
        m.shutdown();
        folds.push(confusion(&probs?, &yv, DEFAULT_THRESHOLD)?);
    }
    record.hap = Some(hap_from_folds(&folds, &cfg.weights, cfg.lambda)?);
    record.fold_confusions = folds;
    Ok(())
}

fn held_out_axes(
    record: &mut EvalRecord,
    model: &mut dyn ProbModel,
    x_test: &crate::Matrix,
    y_test: &[u8],
    cfg: &RunConfig,
) -> Result<()> {
    let probs = model
        .predict_proba(x_test)
        .map_err(|e| e.context("test predictions"))?;
    let cm = confusion(&probs, y_test, DEFAULT_THRESHOLD)?;
    let basic = basic_metrics(&cm)?;
    record.confusion = Some(cm);
    record.performance = Some(PerformanceMetrics {
        accuracy: basic.accuracy,
        precision: basic.precision,
        recall: basic.recall,
        f1: basic.f1,
        auc: auc_roc(&probs, y_test)?,
        degenerate: basic.degenerate,
    });
    let calibration = calibration_report(&probs, y_test, cfg.ece_bins)?;
    record.calibration = Some(calibration);

    let raw = permutation_importance(model, x_test, y_test, cfg.importance_repeats, cfg.seed)?;
    let importance = ImportanceVector::from_raw(&record.model_id, raw);
    let robustness = evaluate_robustness(model, x_test, y_test, &importance, cfg.seed)?;
    record.importance = Some(importance);
    record.flags = Some(RecordFlags {
        calibration_critical: calibration_critical(calibration.ece),
        robustness_band: robustness_band(robustness.composite_r),
    });
    record.robustness = Some(robustness);
    Ok(())
}

/// Cross-model analyses for one cohort: SNR curve, weight-ratio sweep,
/// importance consensus and, in auto mode, HAP at `lambda*`.
pub fn analyze_cohort(analysis: &mut CohortAnalysis, records: &mut [EvalRecord], cfg: &RunConfig) {
    let complete: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].is_complete())
        .collect();
    let ids: Vec<String> = complete
        .iter()
        .map(|&i| records[i].model_id.clone())
        .collect();

    if complete.len() >= 2 {
        let haps: Vec<_> = complete
            .iter()
            .map(|&i| records[i].hap.clone().expect("complete"))
            .collect();
        let mus: Vec<f64> = haps.iter().map(|h| h.mean_cost).collect();
        let vars: Vec<f64> = haps.iter().map(|h| h.cost_variance).collect();
        match fit_snr_curve(&mus, &vars, DEFAULT_LAMBDA_MAX).and_then(|curve| {
            let at_op = snr(cfg.lambda, &mus, &vars)?;
            Ok((curve, at_op))
        }) {
            Ok((curve, at_op)) => {
                if cfg.lambda_mode == LambdaMode::Auto {
                    for &i in &complete {
                        let h = records[i].hap.as_ref().expect("complete");
                        records[i].hap_auto = hap_score(&h.fold_costs, curve.lambda_star).ok();
                    }
                }
                analysis.snr = Some(CohortSnr {
                    model_ids: ids.clone(),
                    operating_lambda: cfg.lambda,
                    snr_at_operating: at_op,
                    fraction_of_max: at_op / curve.snr_at_star,
                    curve,
                });
            }
            Err(e) => analysis.notes.push(format!("snr curve: {e}")),
        }

        let models: Vec<(String, Vec<_>)> = complete
            .iter()
            .map(|&i| {
                (
                    records[i].model_id.clone(),
                    records[i].fold_confusions.clone(),
                )
            })
            .collect();
        match sensitivity_sweep(&models, &cfg.sweep_ratios, cfg.lambda, cfg.weights.w_fp) {
            Ok(s) => analysis.sensitivity = Some(s),
            Err(e) => analysis.notes.push(format!("sensitivity sweep: {e}")),
        }
    } else {
        analysis
            .notes
            .push("snr curve and sensitivity sweep need at least 2 complete models".into());
    }

    let importances: Vec<ImportanceVector> = complete
        .iter()
        .filter_map(|&i| records[i].importance.clone())
        .collect();
    match consensus(&importances) {
        Ok(c) => analysis.consensus = Some(c),
        Err(e) => analysis.notes.push(format!("consensus: {e}")),
    }
}

fn settings(cfg: &RunConfig) -> RunSettings {
    RunSettings {
        seed: cfg.seed,
        test_frac: cfg.test_frac,
        folds: cfg.folds,
        weights: cfg.weights,
        lambda_mode: cfg.lambda_mode,
        lambda: cfg.lambda,
        ece_bins: cfg.ece_bins,
        importance_repeats: cfg.importance_repeats,
        sweep_ratios: cfg.sweep_ratios.clone(),
    }
}

/// Runs the full benchmark over already-loaded cohorts.
pub fn run_on_datasets(cfg: &RunConfig, datasets: Vec<CohortDataset>) -> Result<BenchReport> {
    cfg.validate()?;
    let mut prepared = datasets
        .into_iter()
        .map(|ds| prepare_cohort(ds, cfg))
        .collect::<Result<Vec<_>>>()?;
    prepared.sort_by_key(|p| p.dataset.cohort());

    let cells: Vec<(usize, &ModelSpec)> = (0..prepared.len())
        .flat_map(|c| cfg.models.iter().map(move |m| (c, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| BenchError::invalid(format!("worker pool: {e}")))?;
    let mut records: Vec<EvalRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(c, spec)| {
                info!(
                    "evaluating {} on {}",
                    spec.model_id,
                    prepared[c].dataset.cohort()
                );
                evaluate_cell(spec, &prepared[c], cfg)
            })
            .collect()
    });
    records.sort_by(|a, b| (a.cohort, &a.model_id).cmp(&(b.cohort, &b.model_id)));

    let mut cohorts = Vec::with_capacity(prepared.len());
    for p in prepared {
        let cohort = p.dataset.cohort();
        let mut analysis = p.analysis;
        let start = records.iter().position(|r| r.cohort == cohort).unwrap_or(0);
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| r.cohort == cohort)
                .count();
        let slice = &mut records[start..end];
        if !slice.iter().any(EvalRecord::is_complete) {
            let reasons: Vec<String> = slice
                .iter()
                .map(|r| {
                    format!(
                        "{}: {}",
                        r.model_id,
                        r.error.as_deref().unwrap_or("incomplete")
                    )
                })
                .collect();
            return Err(BenchError::Model {
                model: "*".into(),
                message: format!(
                    "every model failed on cohort {cohort} ({})",
                    reasons.join("; ")
                ),
            });
        }
        analyze_cohort(&mut analysis, slice, cfg);
        cohorts.push(analysis);
    }

    let mut recommendations = Vec::new();
    for c in &cohorts {
        for setting in Setting::ALL {
            let rec = recommend(&records, c.cohort, setting)?;
            if let Some(w) = &rec.warning {
                warn!("{} / {}: {w}", c.cohort, setting.as_str());
            }
            recommendations.push(rec);
        }
    }

    Ok(BenchReport {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        settings: settings(cfg),
        scorecard: build_scorecard(&records),
        cohorts,
        records,
        recommendations,
    })
}

/// Loads the configured cohort files and runs the benchmark.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let datasets = cfg
        .cohorts
        .iter()
        .map(|c| load_csv(&c.path, c.id))
        .collect::<Result<Vec<_>>>()?;
    run_on_datasets(cfg, datasets)
}
