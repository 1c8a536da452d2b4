use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hap::{
    fit_snr_curve, hap_from_folds, sensitivity_sweep, snr, HapResult, PenaltyWeights,
    SensitivityResult, SnrCurve, DEFAULT_LAMBDA_MAX,
};
use crate::ingest::{deduplicate, load_csv, make_fold_plan, summarize, CohortId, DatasetSummary};
use crate::interpret::{permutation_importance, ImportanceVector};
use crate::metrics::ConfusionMatrix;
use crate::modelhost::{fit, ModelSpec};
use crate::robustness::{evaluate_conditions, PerturbationSpec, Protocol};
use crate::{BenchError, Result};

/// One fold's confusion counts: either `[tp, tn, fp, fn]` or an object
/// with those keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FoldCounts {
    Array([u64; 4]),
    Object(ConfusionMatrix),
}

impl From<FoldCounts> for ConfusionMatrix {
    fn from(f: FoldCounts) -> Self {
        match f {
            FoldCounts::Array([tp, tn, fp, fn_]) => ConfusionMatrix::new(tp, tn, fp, fn_),
            FoldCounts::Object(cm) => cm,
        }
    }
}

/// Input of the standalone HAP tool: fold confusions keyed by model id.
pub type ConfusionInput = BTreeMap<String, Vec<FoldCounts>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    Auto,
}

impl std::str::FromStr for LambdaChoice {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(LambdaChoice::Fixed(v)),
            _ => Err(BenchError::invalid(format!(
                "lambda must be a non-negative number or `auto`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapAnalysis {
    pub weights: PenaltyWeights,
    /// Lambda the per-model results are evaluated at.
    pub lambda: f64,
    pub results: BTreeMap<String, HapResult>,
    pub snr_curve: Option<SnrCurve>,
    pub snr_at_lambda: Option<f64>,
    pub sensitivity: Option<SensitivityResult>,
    pub notes: Vec<String>,
}

/// HAP per model, plus the SNR curve (two or more models) and optionally
/// the weight-ratio sweep. In auto mode the per-model results and the
/// sweep are evaluated at `lambda*`.
pub fn analyze_confusions(
    input: &ConfusionInput,
    weights: PenaltyWeights,
    lambda: LambdaChoice,
    sweep_ratios: Option<&[f64]>,
) -> Result<HapAnalysis> {
    if input.is_empty() {
        return Err(BenchError::invalid("no models in confusion input"));
    }
    weights.validate()?;
    let folds: Vec<(String, Vec<ConfusionMatrix>)> = input
        .iter()
        .map(|(id, f)| (id.clone(), f.iter().copied().map(Into::into).collect()))
        .collect();
    let base = folds
        .iter()
        .map(|(id, f)| {
            hap_from_folds(f, &weights, 1.0).map_err(|e| e.context(format!("model `{id}`")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut notes = Vec::new();
    let mus: Vec<f64> = base.iter().map(|h| h.mean_cost).collect();
    let vars: Vec<f64> = base.iter().map(|h| h.cost_variance).collect();
    let curve = if folds.len() >= 2 {
        match fit_snr_curve(&mus, &vars, DEFAULT_LAMBDA_MAX) {
            Ok(c) => Some(c),
            Err(e) => {
                notes.push(format!("snr curve: {e}"));
                None
            }
        }
    } else {
        notes.push("snr curve needs at least 2 models".into());
        None
    };

    let lambda = match lambda {
        LambdaChoice::Fixed(l) => l,
        LambdaChoice::Auto => match &curve {
            Some(c) => c.lambda_star,
            None => {
                return Err(BenchError::Undefined(
                    "lambda* needs a valid SNR curve".into(),
                ))
            }
        },
    };
    let results = folds
        .iter()
        .zip(&base)
        .map(|((id, _), h)| Ok((id.clone(), crate::hap::hap_score(&h.fold_costs, lambda)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let snr_at_lambda = if curve.is_some() {
        snr(lambda, &mus, &vars).ok()
    } else {
        None
    };

    let sensitivity = match sweep_ratios {
        Some(ratios) => Some(sensitivity_sweep(&folds, ratios, lambda, weights.w_fp)?),
        None => None,
    };
    Ok(HapAnalysis {
        weights,
        lambda,
        results,
        snr_curve: curve,
        snr_at_lambda,
        sensitivity,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbOutcome {
    pub model: String,
    pub cohort: CohortId,
    pub protocol: Protocol,
    pub level: f64,
    pub seed: u64,
    pub test_size: usize,
    pub clean_acc: f64,
    pub perturbed_acc: f64,
    pub delta: f64,
}

/// Fits `spec` on the cohort's training split and measures the accuracy
/// change under one perturbation of the held-out split. Levels outside the
/// standard set are allowed.
pub fn perturb_single(
    data: &Path,
    cohort: CohortId,
    spec: &ModelSpec,
    protocol: Protocol,
    level: f64,
    seed: u64,
) -> Result<PerturbOutcome> {
    let pspec = PerturbationSpec {
        protocol,
        level,
        seed,
    };
    pspec.validate(true)?;
    let ds = deduplicate(&load_csv(data, cohort)?)?.dataset;
    let plan = make_fold_plan(&ds, seed, 0.2, 5)?;
    let (x_train, y_train) = ds.subset(&plan.train_indices);
    let (x_test, y_test) = ds.subset(&plan.test_indices);
    let mut model = fit(spec, &x_train, &y_train, seed)?;
    let result = (|| {
        let importance = if protocol == Protocol::FeatureRemoval {
            let raw = permutation_importance(&mut model, &x_test, &y_test, 5, seed)?;
            ImportanceVector::from_raw(&spec.model_id, raw).scores
        } else {
            vec![0.0; x_test.n_cols()]
        };
        evaluate_conditions(&mut model, &x_test, &y_test, &importance, &[pspec])
    })();
    model.shutdown();
    let report = result?;
    let c = &report.per_condition[0];
    Ok(PerturbOutcome {
        model: spec.model_id.clone(),
        cohort,
        protocol,
        level,
        seed,
        test_size: y_test.len(),
        clean_acc: report.clean_accuracy,
        perturbed_acc: c.perturbed_accuracy,
        delta: c.delta_acc,
    })
}

/// Load, deduplicate and describe one cohort file.
pub fn validate_data(data: &Path, cohort: CohortId) -> Result<DatasetSummary> {
    let loaded = load_csv(data, cohort)?;
    let dedup = deduplicate(&loaded)?;
    Ok(summarize(&loaded, &dedup))
}

/// Guesses the cohort from a file name such as `adult.csv` or
/// `v3_adolescent.csv`.
pub fn infer_cohort(path: &Path) -> Option<CohortId> {
    let stem = path.file_stem()?.to_str()?.to_ascii_lowercase();
    [CohortId::Adolescent, CohortId::Child, CohortId::Adult]
        .into_iter()
        .find(|c| stem.contains(c.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_counts_parse_both_forms() {
        let input: ConfusionInput =
            serde_json::from_str(r#"{"a":[[50,46,3,1],{"tp":1,"tn":2,"fp":3,"fn":4}]}"#).unwrap();
        let a: Vec<ConfusionMatrix> = input["a"].iter().copied().map(Into::into).collect();
        assert_eq!(a[0], ConfusionMatrix::new(50, 46, 3, 1));
        assert_eq!(a[1], ConfusionMatrix::new(1, 2, 3, 4));
    }

    #[test]
    fn lambda_choice_parsing() {
        assert_eq!("auto".parse::<LambdaChoice>().unwrap(), LambdaChoice::Auto);
        assert_eq!(
            "1.5".parse::<LambdaChoice>().unwrap(),
            LambdaChoice::Fixed(1.5)
        );
        assert!("-1".parse::<LambdaChoice>().is_err());
        assert!("x".parse::<LambdaChoice>().is_err());
    }

    #[test]
    fn analysis_single_model_has_no_curve() {
        let input: ConfusionInput =
            serde_json::from_str(r#"{"a":[[50,46,3,1],[48,47,2,3]]}"#).unwrap();
        let out = analyze_confusions(
            &input,
            PenaltyWeights::default(),
            LambdaChoice::Fixed(1.0),
            None,
        )
        .unwrap();
        assert!(out.snr_curve.is_none());
        let h = &out.results["a"];
        assert!((h.fold_costs[0] - 0.16).abs() < 1e-12);
        assert!(
            analyze_confusions(&input, PenaltyWeights::default(), LambdaChoice::Auto, None)
                .is_err()
        );
    }

    #[test]
    fn cohort_inference() {
        assert_eq!(
            infer_cohort(Path::new("data/adult.csv")),
            Some(CohortId::Adult)
        );
        assert_eq!(
            infer_cohort(Path::new("v3_Adolescent.csv")),
            Some(CohortId::Adolescent)
        );
        assert_eq!(
            infer_cohort(Path::new("child-2024.csv")),
            Some(CohortId::Child)
        );
        assert_eq!(infer_cohort(Path::new("x.csv")), None);
    }
}
