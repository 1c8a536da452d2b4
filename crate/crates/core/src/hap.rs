//! Heuristic Aggregate Penalty (HAP).
//!
//! Per fold `k` the weighted cost is `C_k = (w_fp * FP_k + w_fn * FN_k) / N_k`.
//! A model's HAP over K folds is `mean(C) + lambda * var(C)` with the
//! population variance. Viewed as a function of `lambda` each model traces
//! the line `mu_i + lambda * var_i`; this module also provides the pairwise
//! crossover points of those lines, the inter-model separation
//! `S(lambda)`, the discrimination SNR `S / sd_i(HAP_i)`, the SNR-optimal
//! `lambda*`, and the weight-ratio sensitivity sweep summarized by
//! Kendall's W.
//!
//! Variances and covariances are computed in pairwise form,
//! `var(x) = sum_{i<j} (x_i - x_j)^2 / n^2`, which equals the population
//! variance and is exactly zero for constant input.

use serde::{Deserialize, Serialize};

use crate::metrics::ConfusionMatrix;
use crate::{BenchError, Result};

pub const DEFAULT_W_FP: f64 = 2.0;
pub const DEFAULT_W_FN: f64 = 10.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;
/// Upper end of the `lambda*` search domain.
pub const DEFAULT_LAMBDA_MAX: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub w_fp: f64,
    pub w_fn: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            w_fp: DEFAULT_W_FP,
            w_fn: DEFAULT_W_FN,
        }
    }
}

impl PenaltyWeights {
    pub fn new(w_fp: f64, w_fn: f64) -> Result<Self> {
        let w = Self { w_fp, w_fn };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.w_fp) || !ok(self.w_fn) {
            return Err(BenchError::invalid(format!(
                "penalty weights must be finite and non-negative, got ({}, {})",
                self.w_fp, self.w_fn
            )));
        }
        if self.w_fp == 0.0 && self.w_fn == 0.0 {
            return Err(BenchError::invalid("penalty weights are both zero"));
        }
        Ok(())
    }
}

/// Weighted misclassification cost of one fold.
pub fn fold_cost(cm: &ConfusionMatrix, w: &PenaltyWeights) -> Result<f64> {
    let n = cm.total();
    if n == 0 {
        return Err(BenchError::Empty);
    }
    Ok((w.w_fp * cm.fp as f64 + w.w_fn * cm.fn_ as f64) / n as f64)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population covariance in pairwise form.
pub(crate) fn pop_cov(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += (a[i] - a[j]) * (b[i] - b[j]);
        }
    }
    acc / (n * n) as f64
}

pub(crate) fn pop_var(a: &[f64]) -> f64 {
    pop_cov(a, a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapResult {
    pub fold_costs: Vec<f64>,
    pub mean_cost: f64,
    pub cost_variance: f64,
    pub lambda: f64,
    pub hap: f64,
}

impl HapResult {
    /// HAP of the same fold costs under another penalty weight.
    pub fn at_lambda(&self, lambda: f64) -> f64 {
        self.mean_cost + lambda * self.cost_variance
    }
}

pub fn hap_score(fold_costs: &[f64], lambda: f64) -> Result<HapResult> {
    if fold_costs.len() < 2 {
        return Err(BenchError::invalid(format!(
            "HAP needs at least 2 folds, got {}",
            fold_costs.len()
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(BenchError::invalid(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let mean_cost = mean(fold_costs);
    let cost_variance = pop_var(fold_costs);
    Ok(HapResult {
        fold_costs: fold_costs.to_vec(),
        mean_cost,
        cost_variance,
        lambda,
        hap: mean_cost + lambda * cost_variance,
    })
}

/// HAP straight from per-fold confusion matrices.
pub fn hap_from_folds(
    folds: &[ConfusionMatrix],
    w: &PenaltyWeights,
    lambda: f64,
) -> Result<HapResult> {
    let costs = folds
        .iter()
        .map(|cm| fold_cost(cm, w))
        .collect::<Result<Vec<_>>>()?;
    hap_score(&costs, lambda)
}

/// Non-negative `lambda` at which the HAP lines of models i and j meet.
pub fn crossover_lambda(mu_i: f64, var_i: f64, mu_j: f64, var_j: f64) -> Option<f64> {
    if var_i == var_j {
        return None;
    }
    let x = (mu_j - mu_i) / (var_i - var_j);
    (x.is_finite() && x >= 0.0).then_some(x)
}

/// Mean absolute pairwise gap.
pub fn separation(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(BenchError::invalid("separation needs at least 2 models"));
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += (values[i] - values[j]).abs();
        }
    }
    Ok(acc / (n * (n - 1) / 2) as f64)
}

fn check_moments(mus: &[f64], vars: &[f64]) -> Result<()> {
    if mus.len() != vars.len() {
        return Err(BenchError::LengthMismatch {
            expected: mus.len(),
            got: vars.len(),
        });
    }
    if mus.len() < 2 {
        return Err(BenchError::invalid("need at least 2 models"));
    }
    if mus.iter().chain(vars).any(|v| !v.is_finite()) {
        return Err(BenchError::invalid("non-finite model moments"));
    }
    Ok(())
}

pub fn hap_values(lambda: f64, mus: &[f64], vars: &[f64]) -> Vec<f64> {
    mus.iter().zip(vars).map(|(m, v)| m + lambda * v).collect()
}

/// Exact discrimination SNR at `lambda`.
pub fn snr(lambda: f64, mus: &[f64], vars: &[f64]) -> Result<f64> {
    check_moments(mus, vars)?;
    snr_unchecked(lambda, mus, vars)
}

fn snr_unchecked(lambda: f64, mus: &[f64], vars: &[f64]) -> Result<f64> {
    let h = hap_values(lambda, mus, vars);
    let spread = pop_var(&h);
    if spread <= 0.0 {
        return Err(BenchError::Undefined(format!(
            "all models have identical HAP at lambda = {lambda}"
        )));
    }
    Ok(separation(&h)? / spread.sqrt())
}

/// Smallest strictly positive pairwise crossover.
pub fn first_crossover(mus: &[f64], vars: &[f64]) -> Option<f64> {
    let n = mus.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        for j in i + 1..n {
            if let Some(x) = crossover_lambda(mus[i], vars[i], mus[j], vars[j]) {
                if x > 0.0 && best.is_none_or(|b| x < b) {
                    best = Some(x);
                }
            }
        }
    }
    best
}

/// Largest non-negative pairwise crossover.
pub fn last_crossover(mus: &[f64], vars: &[f64]) -> Option<f64> {
    let n = mus.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        for j in i + 1..n {
            if let Some(x) = crossover_lambda(mus[i], vars[i], mus[j], vars[j]) {
                if best.is_none_or(|b| x > b) {
                    best = Some(x);
                }
            }
        }
    }
    best
}

/// All pairwise crossovers strictly inside `(lo, hi)`, sorted, deduplicated.
pub fn crossovers_within(mus: &[f64], vars: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = mus.len();
    let mut xs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let Some(x) = crossover_lambda(mus[i], vars[i], mus[j], vars[j]) {
                if x > lo && x < hi {
                    xs.push(x);
                }
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    /// E = Var(sigma^2) is zero: the spread is not quadratic in lambda.
    ZeroVarianceSpread,
    /// The separation does not grow with lambda on the first linear segment.
    NonPositiveSlope,
    SingularDenominator,
    /// Stationary point lies outside the domain or past the first crossover.
    OutsideLinearSegment,
    NotAMaximum,
    /// A later segment or a breakpoint has a larger SNR.
    NotGlobal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", content = "reason", rename_all = "snake_case")]
pub enum LambdaStarMethod {
    /// Stationary point of the first linear segment.
    ClosedForm,
    /// Best of every segment's stationary point and every breakpoint.
    Piecewise(FallbackReason),
}

impl LambdaStarMethod {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, LambdaStarMethod::Piecewise(_))
    }
}

/// SNR analysis for one set of models over `lambda` in `[0, lambda_max]`.
///
/// Between consecutive crossovers the ordering of HAP values is fixed, so
/// the separation is exactly linear there, while the spread of HAP values
/// is the quadratic `c + d*l + e*l^2` everywhere. On a segment where
/// `S = a + b*l` the SNR has a single stationary point at
/// `(2bc - ad) / (2ae - bd)`. `a`, `b` describe the segment before the
/// first crossover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrCurve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub lambda_max: f64,
    pub first_crossover: Option<f64>,
    pub lambda_star: f64,
    pub snr_at_star: f64,
    /// Central-difference d2 SNR / d lambda2 at `lambda_star`; absent when
    /// `lambda_star` is a crossover or a domain end.
    pub curvature_at_star: Option<f64>,
    pub method: LambdaStarMethod,
}

impl SnrCurve {
    pub fn degenerate(&self) -> bool {
        self.method.is_degenerate()
    }
}

/// Stationary point of `(a + b l) / sqrt(c + d l + e l^2)`.
pub fn snr_stationary_point(a: f64, b: f64, c: f64, d: f64, e: f64) -> Option<f64> {
    let den = 2.0 * a * e - b * d;
    let lam = (2.0 * b * c - a * d) / den;
    (den != 0.0 && lam.is_finite()).then_some(lam)
}

fn curvature(lambda: f64, lo: f64, hi: f64, mus: &[f64], vars: &[f64]) -> Option<f64> {
    let h = 1e-3_f64.min((lambda - lo) / 2.0).min((hi - lambda) / 2.0);
    if h.is_nan() || h <= 0.0 {
        return None;
    }
    let f = |l: f64| snr_unchecked(l, mus, vars).ok();
    let (fm, f0, fp) = (f(lambda - h)?, f(lambda)?, f(lambda + h)?);
    Some((fp - 2.0 * f0 + fm) / (h * h))
}

/// Negative beyond finite-difference noise.
fn is_strict_max(curv: f64, snr_value: f64) -> bool {
    curv < -1e-8 * snr_value.abs().max(1.0)
}

struct Candidate {
    lambda: f64,
    snr: f64,
    /// Segment bounds when the point is a segment's interior stationary point.
    segment: Option<(f64, f64)>,
}

/// Exact maximum of the SNR over `[0, lambda_max]`: the best among all
/// breakpoints and all in-segment stationary points. Ties go to the
/// smallest `lambda` (relative tolerance 1e-12).
fn piecewise_max(
    mus: &[f64],
    vars: &[f64],
    c: f64,
    d: f64,
    e: f64,
    lambda_max: f64,
) -> Result<Candidate> {
    let mut breaks = vec![0.0];
    breaks.extend(crossovers_within(mus, vars, 0.0, lambda_max));
    breaks.push(lambda_max);
    let sep = |l: f64| separation(&hap_values(l, mus, vars));

    let mut cands: Vec<Candidate> = Vec::new();
    let mut push = |lambda: f64, segment: Option<(f64, f64)>| {
        if let Ok(s) = snr_unchecked(lambda, mus, vars) {
            cands.push(Candidate {
                lambda,
                snr: s,
                segment,
            });
        }
    };
    for w in breaks.windows(2) {
        let (u, v) = (w[0], w[1]);
        push(u, None);
        let (su, sv) = (sep(u)?, sep(v)?);
        let b = (sv - su) / (v - u);
        let a = su - b * u;
        if let Some(l) = snr_stationary_point(a, b, c, d, e) {
            if l > u && l < v {
                push(l, Some((u, v)));
            }
        }
    }
    push(lambda_max, None);

    let max = cands
        .iter()
        .map(|c| c.snr)
        .fold(f64::NEG_INFINITY, f64::max);
    cands.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    cands
        .into_iter()
        .find(|c| c.snr >= max - 1e-12 * max.abs())
        .ok_or_else(|| BenchError::Undefined("SNR undefined on the whole domain".into()))
}

/// Locates `lambda*` on `[0, lambda_max]`.
///
/// The first-segment closed form is reported when it is a strict local
/// maximum inside that segment and matches the exact piecewise maximum;
/// otherwise `lambda*` is the piecewise maximum and `method` records why
/// the closed form was not used.
pub fn fit_snr_curve(mus: &[f64], vars: &[f64], lambda_max: f64) -> Result<SnrCurve> {
    check_moments(mus, vars)?;
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(BenchError::invalid(format!(
            "lambda_max {lambda_max} must be positive"
        )));
    }
    let first = first_crossover(mus, vars);
    let seg_end = first.map_or(lambda_max, |x| x.min(lambda_max));
    let s0 = separation(&hap_values(0.0, mus, vars))?;
    let s1 = separation(&hap_values(seg_end, mus, vars))?;
    let b = (s1 - s0) / seg_end;
    let a = s0;
    let c = pop_var(mus);
    let d = 2.0 * pop_cov(mus, vars);
    let e = pop_var(vars);

    let best = piecewise_max(mus, vars, c, d, e, lambda_max)?;

    let closed = || -> std::result::Result<(f64, f64, f64), FallbackReason> {
        if e <= 0.0 {
            return Err(FallbackReason::ZeroVarianceSpread);
        }
        if b <= 0.0 {
            return Err(FallbackReason::NonPositiveSlope);
        }
        let lam = snr_stationary_point(a, b, c, d, e).ok_or(FallbackReason::SingularDenominator)?;
        if lam <= 0.0 || lam >= seg_end {
            return Err(FallbackReason::OutsideLinearSegment);
        }
        let s = snr_unchecked(lam, mus, vars).map_err(|_| FallbackReason::NotAMaximum)?;
        let curv = curvature(lam, 0.0, seg_end, mus, vars).ok_or(FallbackReason::NotAMaximum)?;
        if !is_strict_max(curv, s) {
            return Err(FallbackReason::NotAMaximum);
        }
        if s < best.snr - 1e-12 * best.snr.abs() {
            return Err(FallbackReason::NotGlobal);
        }
        Ok((lam, s, curv))
    };

    let (lambda_star, snr_at_star, curvature_at_star, method) = match closed() {
        Ok((lam, s, curv)) => (lam, s, Some(curv), LambdaStarMethod::ClosedForm),
        Err(reason) => {
            let curv = best
                .segment
                .and_then(|(u, v)| curvature(best.lambda, u, v, mus, vars));
            (
                best.lambda,
                best.snr,
                curv,
                LambdaStarMethod::Piecewise(reason),
            )
        }
    };

    Ok(SnrCurve {
        a,
        b,
        c,
        d,
        e,
        lambda_max,
        first_crossover: first,
        lambda_star,
        snr_at_star,
        curvature_at_star,
        method,
    })
}

/// `w_fn / w_fp` in `{1, 1.5, 2, ..., 20}` (39 points).
pub fn default_ratio_grid() -> Vec<f64> {
    (0..39).map(|i| 1.0 + 0.5 * i as f64).collect()
}

/// Average (fractional) ranks, 1 = smallest. Values within a relative
/// 1e-12 of the first member of a run are tied.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let head = values[order[start]];
        let tol = 1e-12 * head.abs().max(1.0);
        let mut end = start + 1;
        while end < order.len() && values[order[end]] - head <= tol {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn tie_term(ranks: &[f64]) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut t_sum = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        t_sum += t * t * t - t;
        start = end;
    }
    t_sum
}

/// Kendall's coefficient of concordance over `m` rankings of `n` items,
/// with the tie-corrected denominator. When every ranking is a full tie
/// the denominator vanishes and W is reported as 1.
pub fn kendall_w(rankings: &[Vec<f64>]) -> Result<f64> {
    let m = rankings.len();
    if m == 0 {
        return Err(BenchError::invalid("no rankings"));
    }
    let n = rankings[0].len();
    if n < 2 {
        return Err(BenchError::invalid("Kendall's W needs at least 2 items"));
    }
    if let Some(r) = rankings.iter().find(|r| r.len() != n) {
        return Err(BenchError::LengthMismatch {
            expected: n,
            got: r.len(),
        });
    }
    let totals: Vec<f64> = (0..n)
        .map(|i| rankings.iter().map(|r| r[i]).sum())
        .collect();
    let grand = mean(&totals);
    let s: f64 = totals.iter().map(|t| (t - grand).powi(2)).sum();
    let (mf, nf) = (m as f64, n as f64);
    let ties: f64 = rankings.iter().map(|r| tie_term(r)).sum();
    let denom = mf * mf * (nf * nf * nf - nf) - mf * ties;
    if denom <= 0.0 {
        return Ok(1.0);
    }
    Ok((12.0 * s / denom).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub model_ids: Vec<String>,
    pub ratios: Vec<f64>,
    pub lambda: f64,
    /// `hap[r][i]`: HAP of model `i` at ratio `ratios[r]`.
    pub hap: Vec<Vec<f64>>,
    /// Ascending-HAP average ranks, same layout as `hap`.
    pub rankings: Vec<Vec<f64>>,
    pub kendall_w: f64,
}

/// Recomputes HAP for every `w_fn / w_fp` ratio (with `w_fp` fixed) and
/// measures ranking agreement across the sweep.
pub fn sensitivity_sweep(
    models: &[(String, Vec<ConfusionMatrix>)],
    ratios: &[f64],
    lambda: f64,
    w_fp: f64,
) -> Result<SensitivityResult> {
    if models.len() < 2 {
        return Err(BenchError::invalid(
            "sensitivity sweep needs at least 2 models",
        ));
    }
    if ratios.is_empty() {
        return Err(BenchError::invalid("empty ratio grid"));
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(BenchError::invalid(format!("bad weight ratio {r}")));
    }
    let mut hap = Vec::with_capacity(ratios.len());
    let mut rankings = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let w = PenaltyWeights::new(w_fp, ratio * w_fp)?;
        let row = models
            .iter()
            .map(|(id, folds)| {
                hap_from_folds(folds, &w, lambda)
                    .map(|h| h.hap)
                    .map_err(|e| e.context(format!("model `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        rankings.push(average_ranks(&row));
        hap.push(row);
    }
    let kendall_w = kendall_w(&rankings)?;
    Ok(SensitivityResult {
        model_ids: models.iter().map(|(id, _)| id.clone()).collect(),
        ratios: ratios.to_vec(),
        lambda,
        hap,
        rankings,
        kendall_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn fold_cost_examples() {
        let w = PenaltyWeights::default();
        let c = fold_cost(&ConfusionMatrix::new(50, 46, 3, 1), &w).unwrap();
        assert!((c - 0.16).abs() < EPS);
        assert_eq!(
            fold_cost(&ConfusionMatrix::new(5, 5, 0, 0), &w).unwrap(),
            0.0
        );
        assert_eq!(
            fold_cost(&ConfusionMatrix::new(0, 0, 0, 7), &w).unwrap(),
            10.0
        );
        assert!(fold_cost(&ConfusionMatrix::default(), &w).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(PenaltyWeights::new(0.0, 0.0).is_err());
        assert!(PenaltyWeights::new(-1.0, 2.0).is_err());
        assert!(PenaltyWeights::new(f64::NAN, 2.0).is_err());
        assert!(PenaltyWeights::new(0.0, 2.0).is_ok());
    }

    #[test]
    fn hap_examples() {
        let r = hap_score(&[0.2; 5], 1.0).unwrap();
        assert_eq!(r.cost_variance, 0.0);
        assert_eq!(r.hap, r.mean_cost);
        assert!((r.hap - 0.2).abs() < EPS);

        let r = hap_score(&[0.1, 0.2, 0.3, 0.2, 0.2], 1.0).unwrap();
        assert!((r.mean_cost - 0.2).abs() < EPS);
        assert!((r.cost_variance - 0.004).abs() < EPS);
        assert!((r.hap - 0.204).abs() < EPS);

        let r = hap_score(&[0.0, 0.4], 0.0).unwrap();
        assert!((r.hap - 0.2).abs() < EPS);

        assert!(hap_score(&[0.3], 1.0).is_err());
        assert!(hap_score(&[0.3, 0.1], -1.0).is_err());
    }

    #[test]
    fn crossover_examples() {
        let x = crossover_lambda(0.1, 0.04, 0.3, 0.01).unwrap();
        assert!((x - 0.2 / 0.03).abs() < 1e-12);
        assert_eq!(crossover_lambda(0.1, 0.02, 0.3, 0.02), None);
        assert_eq!(crossover_lambda(0.3, 0.04, 0.1, 0.01), None);
    }

    #[test]
    fn separation_examples() {
        assert_eq!(separation(&[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(separation(&[0.7; 4]).unwrap(), 0.0);
        assert!((separation(&[0.0, 1.0, 2.0]).unwrap() - 4.0 / 3.0).abs() < EPS);
        assert!(separation(&[1.0]).is_err());
    }

    #[test]
    fn snr_examples() {
        let s = snr(0.0, &[0.0, 1.0], &[0.3, 0.3]).unwrap();
        assert!((s - 2.0).abs() < EPS);
        assert!(matches!(
            snr(0.5, &[0.2, 0.2, 0.2], &[0.1, 0.1, 0.1]),
            Err(BenchError::Undefined(_))
        ));
    }

    #[test]
    fn equal_variances_are_degenerate() {
        let curve = fit_snr_curve(&[0.1, 0.3, 0.4], &[0.02; 3], 20.0).unwrap();
        assert_eq!(
            curve.method,
            LambdaStarMethod::Piecewise(FallbackReason::ZeroVarianceSpread)
        );
        assert!(curve.degenerate());
        assert_eq!(curve.e, 0.0);
    }

    #[test]
    fn two_model_curve_is_flat_and_degenerate() {
        // For two models S = 2 sd exactly, so the SNR is 2 everywhere.
        let curve = fit_snr_curve(&[0.1, 0.3], &[0.04, 0.01], 10.0).unwrap();
        assert!(curve.degenerate());
        assert!((curve.snr_at_star - 2.0).abs() < 1e-12);
        assert_eq!(curve.lambda_star, 0.0);
    }

    #[test]
    fn ratio_grid_shape() {
        let g = default_ratio_grid();
        assert_eq!(g.len(), 39);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[38], 20.0);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[0.3, 0.1, 0.3, 0.5]),
            vec![2.5, 1.0, 2.5, 4.0]
        );
    }

    #[test]
    fn kendall_w_examples() {
        let r = vec![vec![1.0, 2.0, 3.0]; 5];
        assert!((kendall_w(&r).unwrap() - 1.0).abs() < EPS);
        let r = vec![vec![1.0, 2.0, 3.0, 4.0], vec![4.0, 3.0, 2.0, 1.0]];
        assert_eq!(kendall_w(&r).unwrap(), 0.0);
        let r = vec![vec![1.5, 1.5], vec![1.5, 1.5]];
        assert_eq!(kendall_w(&r).unwrap(), 1.0);
    }

    #[test]
    fn sweep_needs_two_models() {
        let one = vec![("m".to_string(), vec![ConfusionMatrix::new(1, 1, 0, 0); 5])];
        assert!(sensitivity_sweep(&one, &default_ratio_grid(), 1.0, 2.0).is_err());
    }
}
