//! Uniform model abstraction.
//!
//! Three native reference classifiers (majority prior, L2 logistic
//! regression, k-NN) and a client for external adapter processes that speak
//! the newline-delimited JSON protocol described in [`adapter`].

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{BenchError, Matrix, Result};

pub mod adapter;
pub mod native;

pub use adapter::AdapterSession;
pub use native::{Knn, LogisticRegression, MajorityPrior};

/// Anything that maps a feature matrix to P(positive) per row.
pub trait ProbModel {
    fn model_id(&self) -> &str;

    fn predict_proba(&mut self, x: &Matrix) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    NativeMajority,
    NativeLogreg,
    NativeKnn,
    External,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "native_majority" => Some(Self::NativeMajority),
            "native_logreg" => Some(Self::NativeLogreg),
            "native_knn" => Some(Self::NativeKnn),
            "external" => Some(Self::External),
            _ => None,
        }
    }
}

/// Model declaration as it appears in run configs.
///
/// Recognized `params`:
///
/// | kind             | key                  | default | range          |
/// |------------------|----------------------|---------|----------------|
/// | `native_logreg`  | `learning_rate`      | 0.5     | (0, 10]        |
/// | `native_logreg`  | `epochs`             | 1000    | 1 ..= 100000   |
/// | `native_logreg`  | `l2`                 | 0.001   | [0, 100]       |
/// | `native_knn`     | `k_neighbors`        | 5       | 1 ..= 1000     |
/// | `external`       | `fit_timeout_s`      | 60      | > 0            |
/// | `external`       | `predict_timeout_s`  | 30      | > 0            |
/// | `external`       | `shutdown_timeout_s` | 5       | > 0            |
///
/// `command` (external only) is the executable followed by its arguments,
/// separated by whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: String,
    pub kind: ModelKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
}

fn param_in(spec: &ModelSpec, key: &str, default: f64, ok: impl Fn(f64) -> bool) -> Result<f64> {
    let v = spec.params.get(key).copied().unwrap_or(default);
    if v.is_finite() && ok(v) {
        Ok(v)
    } else {
        Err(BenchError::invalid(format!(
            "model `{}`: parameter {key} = {v} out of range",
            spec.model_id
        )))
    }
}

fn is_int(v: f64) -> bool {
    v.fract() == 0.0
}

impl ModelSpec {
    pub fn native(model_id: impl Into<String>, kind: ModelKind) -> Self {
        Self {
            model_id: model_id.into(),
            kind,
            params: BTreeMap::new(),
            command: None,
        }
    }

    pub fn external(model_id: impl Into<String>, command: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            kind: ModelKind::External,
            params: BTreeMap::new(),
            command: Some(command.into()),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn allowed_params(&self) -> &'static [&'static str] {
        match self.kind {
            ModelKind::NativeMajority => &[],
            ModelKind::NativeLogreg => &["learning_rate", "epochs", "l2"],
            ModelKind::NativeKnn => &["k_neighbors"],
            ModelKind::External => &["fit_timeout_s", "predict_timeout_s", "shutdown_timeout_s"],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_id.trim().is_empty() {
            return Err(BenchError::invalid("empty model_id"));
        }
        let allowed = self.allowed_params();
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(BenchError::invalid(format!(
                "model `{}`: unknown parameter `{k}` for {:?}",
                self.model_id, self.kind
            )));
        }
        match self.kind {
            ModelKind::External => {
                if self.command.as_deref().is_none_or(|c| c.trim().is_empty()) {
                    return Err(BenchError::invalid(format!(
                        "model `{}`: external model needs a command",
                        self.model_id
                    )));
                }
                self.timeouts()?;
            }
            ModelKind::NativeLogreg => {
                native::LogisticParams::from_spec(self)?;
            }
            ModelKind::NativeKnn => {
                self.k_neighbors()?;
            }
            ModelKind::NativeMajority => {}
        }
        Ok(())
    }

    pub(crate) fn k_neighbors(&self) -> Result<usize> {
        param_in(self, "k_neighbors", 5.0, |v| {
            is_int(v) && (1.0..=1000.0).contains(&v)
        })
        .map(|v| v as usize)
    }

    pub(crate) fn timeouts(&self) -> Result<adapter::Timeouts> {
        let secs =
            |key, default| param_in(self, key, default, |v| v > 0.0).map(Duration::from_secs_f64);
        Ok(adapter::Timeouts {
            fit: secs("fit_timeout_s", 60.0)?,
            predict: secs("predict_timeout_s", 30.0)?,
            shutdown: secs("shutdown_timeout_s", 5.0)?,
        })
    }
}

#[derive(Debug)]
enum State {
    Majority(MajorityPrior),
    Logreg(LogisticRegression),
    Knn(Knn),
    External(AdapterSession),
}

/// A fitted model, bound to the data it was fit on.
#[derive(Debug)]
pub struct ModelHandle {
    spec: ModelSpec,
    state: State,
}

fn check_training_data(spec: &ModelSpec, x: &Matrix, y: &[u8]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(BenchError::LengthMismatch {
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(BenchError::Model {
            model: spec.model_id.clone(),
            message: "training labels must contain both classes".into(),
        });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(BenchError::invalid("labels must be 0/1"));
    }
    Ok(())
}

/// Fits `spec` on `(x, y)`. Deterministic in `(spec, data, seed)`.
pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[u8], seed: u64) -> Result<ModelHandle> {
    spec.validate()?;
    check_training_data(spec, x, y)?;
    let state =
        match spec.kind {
            ModelKind::NativeMajority => State::Majority(MajorityPrior::fit(y)),
            ModelKind::NativeLogreg => {
                let params = native::LogisticParams::from_spec(spec)?;
                State::Logreg(LogisticRegression::fit(x, y, &params).map_err(|m| {
                    BenchError::Model {
                        model: spec.model_id.clone(),
                        message: m,
                    }
                })?)
            }
            ModelKind::NativeKnn => State::Knn(Knn::fit(x, y, spec.k_neighbors()?).map_err(
                |m| BenchError::Model {
                    model: spec.model_id.clone(),
                    message: m,
                },
            )?),
            ModelKind::External => {
                let mut session = AdapterSession::spawn(spec)?;
                session.fit(x, y, seed)?;
                State::External(session)
            }
        };
    Ok(ModelHandle {
        spec: spec.clone(),
        state,
    })
}

impl ModelHandle {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Self-declared configuration string of an external adapter.
    pub fn adapter_config(&self) -> Option<&str> {
        match &self.state {
            State::External(s) => s.config(),
            _ => None,
        }
    }

    /// Terminates the adapter process, if any. Never fails.
    pub fn shutdown(self) {
        if let State::External(s) = self.state {
            s.shutdown();
        }
    }
}

impl ProbModel for ModelHandle {
    fn model_id(&self) -> &str {
        &self.spec.model_id
    }

    fn predict_proba(&mut self, x: &Matrix) -> Result<Vec<f64>> {
        match &mut self.state {
            State::Majority(m) => ProbModel::predict_proba(m, x),
            State::Logreg(m) => ProbModel::predict_proba(m, x),
            State::Knn(m) => ProbModel::predict_proba(m, x),
            State::External(s) => s.predict_proba(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::native("m", ModelKind::NativeMajority)
            .validate()
            .is_ok());
        assert!(ModelSpec::native("", ModelKind::NativeMajority)
            .validate()
            .is_err());
        assert!(ModelSpec::native("m", ModelKind::NativeKnn)
            .with_param("k_neighbors", 2.5)
            .validate()
            .is_err());
        assert!(ModelSpec::native("m", ModelKind::NativeLogreg)
            .with_param("lr", 0.1)
            .validate()
            .is_err());
        assert!(ModelSpec::native("m", ModelKind::External)
            .validate()
            .is_err());
        assert!(ModelSpec::external("m", "python3 adapter.py")
            .validate()
            .is_ok());
    }

    #[test]
    fn spec_json_shape() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"model_id":"knn3","kind":"native_knn","params":{"k_neighbors":3}}"#,
        )
        .unwrap();
        assert_eq!(spec.k_neighbors().unwrap(), 3);
    }

    #[test]
    fn single_class_training_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let spec = ModelSpec::native("m", ModelKind::NativeMajority);
        assert!(fit(&spec, &x, &[1, 1], 0).is_err());
    }
}
