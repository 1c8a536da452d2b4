//! Native reference classifiers.

use crate::{BenchError, Matrix, Result};

use super::{ModelSpec, ProbModel};

/// Predicts the training prevalence for every row.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityPrior {
    prior: f64,
}

impl MajorityPrior {
    pub fn fit(y: &[u8]) -> Self {
        let pos = y.iter().filter(|&&v| v == 1).count();
        Self {
            prior: pos as f64 / y.len() as f64,
        }
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        vec![self.prior; x.n_rows()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 1000,
            l2: 1e-3,
        }
    }
}

impl LogisticParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let d = Self::default();
        let get = |key: &str, default: f64, ok: &dyn Fn(f64) -> bool| {
            super::param_in(spec, key, default, ok)
        };
        Ok(Self {
            learning_rate: get("learning_rate", d.learning_rate, &|v| v > 0.0 && v <= 10.0)?,
            epochs: get("epochs", d.epochs as f64, &|v| {
                super::is_int(v) && (1.0..=100_000.0).contains(&v)
            })? as usize,
            l2: get("l2", d.l2, &|v| (0.0..=100.0).contains(&v))?,
        })
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// L2-regularized logistic regression trained by full-batch gradient
/// descent from zero weights. The bias is not regularized.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    weights: Vec<f64>,
    bias: f64,
}

impl LogisticRegression {
    pub fn from_parameters(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Mean log-loss plus `l2 / 2 * |w|^2`, and its gradient
    /// `(d/dw, d/db)`.
    pub fn loss_and_gradient(
        x: &Matrix,
        y: &[u8],
        weights: &[f64],
        bias: f64,
        l2: f64,
    ) -> (f64, Vec<f64>, f64) {
        let n = x.n_rows() as f64;
        let mut loss = 0.0;
        let mut grad_w = vec![0.0; weights.len()];
        let mut grad_b = 0.0;
        for (row, &label) in x.rows().zip(y) {
            let z = bias + row.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
            let t = f64::from(label);
            loss += softplus(z) - t * z;
            let r = sigmoid(z) - t;
            for (g, a) in grad_w.iter_mut().zip(row) {
                *g += r * a;
            }
            grad_b += r;
        }
        loss /= n;
        grad_b /= n;
        let mut penalty = 0.0;
        for (g, w) in grad_w.iter_mut().zip(weights) {
            *g = *g / n + l2 * w;
            penalty += w * w;
        }
        (loss + 0.5 * l2 * penalty, grad_w, grad_b)
    }

    /// Errors with a message when the loss stops being finite.
    pub fn fit(x: &Matrix, y: &[u8], params: &LogisticParams) -> std::result::Result<Self, String> {
        let mut weights = vec![0.0; x.n_cols()];
        let mut bias = 0.0;
        for epoch in 0..params.epochs {
            let (loss, gw, gb) = Self::loss_and_gradient(x, y, &weights, bias, params.l2);
            if !loss.is_finite() || !gb.is_finite() || gw.iter().any(|g| !g.is_finite()) {
                return Err(format!("logistic regression diverged at epoch {epoch}"));
            }
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w -= params.learning_rate * g;
            }
            bias -= params.learning_rate * gb;
        }
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err("logistic regression produced non-finite weights".into());
        }
        Ok(Self { weights, bias })
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows()
            .map(|row| {
                let z = self.bias
                    + row
                        .iter()
                        .zip(&self.weights)
                        .map(|(a, w)| a * w)
                        .sum::<f64>();
                sigmoid(z)
            })
            .collect()
    }
}

/// Euclidean k-nearest-neighbours; P(positive) is the positive share of the
/// k nearest training rows, equal distances resolved by lower row index.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    x: Matrix,
    y: Vec<u8>,
    k: usize,
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[u8], k: usize) -> std::result::Result<Self, String> {
        if k == 0 {
            return Err("k_neighbors must be positive".into());
        }
        if x.n_rows() < k {
            return Err(format!(
                "k_neighbors = {k} exceeds {} training rows",
                x.n_rows()
            ));
        }
        Ok(Self {
            x: x.clone(),
            y: y.to_vec(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Training row indices of the k nearest neighbours of `query`,
    /// nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .rows()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows()
            .map(|q| {
                let pos = self
                    .neighbors(q)
                    .iter()
                    .filter(|&&i| self.y[i] == 1)
                    .count();
                pos as f64 / self.k as f64
            })
            .collect()
    }
}

fn check_cols(model: &str, expected: usize, x: &Matrix) -> Result<()> {
    if x.n_cols() == expected {
        Ok(())
    } else {
        Err(BenchError::Model {
            model: model.into(),
            message: format!("expected {expected} feature columns, got {}", x.n_cols()),
        })
    }
}

impl ProbModel for MajorityPrior {
    fn model_id(&self) -> &str {
        "native_majority"
    }

    fn predict_proba(&mut self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(MajorityPrior::predict_proba(self, x))
    }
}

impl ProbModel for LogisticRegression {
    fn model_id(&self) -> &str {
        "native_logreg"
    }

    fn predict_proba(&mut self, x: &Matrix) -> Result<Vec<f64>> {
        check_cols("native_logreg", self.weights.len(), x)?;
        Ok(LogisticRegression::predict_proba(self, x))
    }
}

impl ProbModel for Knn {
    fn model_id(&self) -> &str {
        "native_knn"
    }

    fn predict_proba(&mut self, x: &Matrix) -> Result<Vec<f64>> {
        check_cols("native_knn", self.x.n_cols(), x)?;
        Ok(Knn::predict_proba(self, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_outputs_prior() {
        let y = [1, 1, 1, 1, 1, 1, 1, 0, 0, 0];
        let m = MajorityPrior::fit(&y);
        let x = Matrix::zeros(3, 10);
        assert_eq!(m.predict_proba(&x), vec![0.7; 3]);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn logreg_separates_single_feature() {
        // y = A1, n = 40
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40u32 {
            let mut r = vec![0.0; 10];
            r[0] = f64::from(i % 2);
            for (j, v) in r.iter_mut().enumerate().skip(1) {
                *v = f64::from((i >> (j % 5)) & 1);
            }
            y.push((i % 2) as u8);
            rows.push(r);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let m = LogisticRegression::fit(&x, &y, &LogisticParams::default()).unwrap();
        let p = m.predict_proba(&x);
        let correct = p
            .iter()
            .zip(&y)
            .filter(|(p, &t)| (**p >= 0.5) == (t == 1))
            .count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn logreg_divergence_reported() {
        let x = Matrix::from_rows(&[[1e300], [-1e300]]).unwrap();
        let params = LogisticParams {
            learning_rate: 10.0,
            epochs: 50,
            l2: 0.0,
        };
        assert!(LogisticRegression::fit(&x, &[1, 0], &params).is_err());
    }

    #[test]
    fn knn_self_neighbor() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let y = [0, 1, 1];
        let m = Knn::fit(&x, &y, 1).unwrap();
        assert_eq!(m.predict_proba(&x), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn knn_distance_ties_by_index() {
        let x = Matrix::from_rows(&[[1.0], [-1.0], [1.0]]).unwrap();
        let m = Knn::fit(&x, &[1, 0, 0], 2).unwrap();
        assert_eq!(m.neighbors(&[0.0]), vec![0, 1]);
        assert!(Knn::fit(&x, &[1, 0, 0], 4).is_err());
    }
}
