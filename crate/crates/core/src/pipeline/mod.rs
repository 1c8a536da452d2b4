//! Orchestration of full benchmark runs and report output.
//!
//! For each (model, cohort) cell the model is fit on the training split,
//! scored on the held-out split (discrimination, calibration, permutation
//! importance, robustness), then refit on each CV fold complement to get
//! the fold confusion matrices behind HAP. Cells run on a bounded worker
//! pool; records are sorted by (cohort, model id) before any cross-model
//! analysis, so the thread count never changes the output.

mod config;
mod record;
mod report;
mod run;
mod scorecard;
mod tools;

pub use config::{CohortInput, LambdaMode, RunConfig};
pub use record::{
    calibration_critical, BenchReport, CohortAnalysis, CohortSnr, EvalRecord, PerformanceMetrics,
    Recommendation, RecordFlags, RunSettings, ScorecardEntry, Setting,
};
pub use report::{
    check_consistency, emit_reports, load_report, render_recommendations, REPORT_FILES,
};
pub use run::{
    analyze_cohort, evaluate_cell, prepare_cohort, run_benchmark, run_on_datasets, PreparedCohort,
};
pub use scorecard::{build_scorecard, recommend, NOISY_F1_FLOOR};
pub use tools::{
    analyze_confusions, infer_cohort, perturb_single, validate_data, ConfusionInput, FoldCounts,
    HapAnalysis, LambdaChoice, PerturbOutcome,
};
