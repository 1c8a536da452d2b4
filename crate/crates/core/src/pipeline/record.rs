use serde::{Deserialize, Serialize};

use crate::hap::{HapResult, PenaltyWeights, SensitivityResult, SnrCurve};
use crate::ingest::{CohortId, DatasetSummary};
use crate::interpret::{ConsensusReport, ImportanceVector};
use crate::metrics::{CalibrationReport, ConfusionMatrix, DegenerateFlags, ECE_CRITICAL};
use crate::robustness::{RobustnessBand, RobustnessReport};

use super::config::LambdaMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub degenerate: DegenerateFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordFlags {
    /// `ece > 0.12`
    pub calibration_critical: bool,
    pub robustness_band: RobustnessBand,
}

pub fn calibration_critical(ece: f64) -> bool {
    ece > ECE_CRITICAL
}

/// Everything measured for one (model, cohort) cell. When `error` is set the
/// cell failed; axes computed before the failure are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model_id: String,
    pub cohort: CohortId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapter_config: Option<String>,
    pub error: Option<String>,
    pub confusion: Option<ConfusionMatrix>,
    pub performance: Option<PerformanceMetrics>,
    pub calibration: Option<CalibrationReport>,
    pub importance: Option<ImportanceVector>,
    pub robustness: Option<RobustnessReport>,
    pub fold_confusions: Vec<ConfusionMatrix>,
    pub hap: Option<HapResult>,
    /// HAP at the cohort's `lambda*` (auto lambda mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hap_auto: Option<HapResult>,
    pub flags: Option<RecordFlags>,
}

impl EvalRecord {
    pub fn new(model_id: impl Into<String>, cohort: CohortId) -> Self {
        Self {
            model_id: model_id.into(),
            cohort,
            adapter_config: None,
            error: None,
            confusion: None,
            performance: None,
            calibration: None,
            importance: None,
            robustness: None,
            fold_confusions: Vec::new(),
            hap: None,
            hap_auto: None,
            flags: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.error.is_none()
            && self.performance.is_some()
            && self.calibration.is_some()
            && self.importance.is_some()
            && self.robustness.is_some()
            && self.hap.is_some()
    }

    pub fn f1(&self) -> Option<f64> {
        self.performance.map(|p| p.f1)
    }

    pub fn auc(&self) -> Option<f64> {
        self.performance.map(|p| p.auc)
    }

    pub fn ece(&self) -> Option<f64> {
        self.calibration.map(|c| c.ece)
    }

    pub fn composite_r(&self) -> Option<f64> {
        self.robustness.as_ref().map(|r| r.composite_r)
    }

    /// HAP used for ranking: the auto-lambda value when present.
    pub fn ranking_hap(&self) -> Option<f64> {
        self.hap_auto.as_ref().or(self.hap.as_ref()).map(|h| h.hap)
    }
}

/// SNR analysis of one cohort's model set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSnr {
    pub model_ids: Vec<String>,
    pub curve: SnrCurve,
    pub operating_lambda: f64,
    pub snr_at_operating: f64,
    /// `snr_at_operating / snr_at_star`
    pub fraction_of_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortAnalysis {
    pub cohort: CohortId,
    pub dataset: DatasetSummary,
    pub train_size: usize,
    pub test_size: usize,
    pub fold_sizes: Vec<usize>,
    pub snr: Option<CohortSnr>,
    pub sensitivity: Option<SensitivityResult>,
    pub consensus: Option<ConsensusReport>,
    /// Why an analysis above is missing, if it is.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorecardEntry {
    pub model_id: String,
    pub cohort: CohortId,
    pub f1: f64,
    pub auc: f64,
    /// `1 - ECE`
    pub calibration: f64,
    /// Composite R clamped to [0,1] for display.
    pub robustness: f64,
    pub robustness_raw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    General,
    Noisy,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::General, Setting::Noisy];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::General => "general",
            Setting::Noisy => "noisy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub cohort: CohortId,
    pub setting: Setting,
    pub model_id: String,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub test_frac: f64,
    pub folds: usize,
    pub weights: PenaltyWeights,
    pub lambda_mode: LambdaMode,
    pub lambda: f64,
    pub ece_bins: usize,
    pub importance_repeats: usize,
    pub sweep_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub engine_version: String,
    pub settings: RunSettings,
    pub cohorts: Vec<CohortAnalysis>,
    pub records: Vec<EvalRecord>,
    pub scorecard: Vec<ScorecardEntry>,
    pub recommendations: Vec<Recommendation>,
}

impl BenchReport {
    pub fn failed_records(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn record(&self, cohort: CohortId, model_id: &str) -> Option<&EvalRecord> {
        self.records
            .iter()
            .find(|r| r.cohort == cohort && r.model_id == model_id)
    }

    pub fn cohort(&self, cohort: CohortId) -> Option<&CohortAnalysis> {
        self.cohorts.iter().find(|c| c.cohort == cohort)
    }
}
