//! Evaluation metrics for decoded positions.
//!
//! Undefined metrics (constant inputs, empty series) are reported as
//! [`Error::UndefinedMetric`] instead of NaN.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::correct::CorrectionTrace;
use crate::error::{Error, Result};
use crate::model::{ActiveSpace, TrajectorySeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum R2Variant {
    /// Denominator uses the mean of the ground truth.
    #[default]
    Standard,
    /// Denominator uses the mean of the predictions.
    PredictionMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    /// Natural log, divergences in nats.
    #[default]
    #[serde(rename = "e")]
    Natural,
    /// Base 2, divergences in bits.
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    fn ln_factor(self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }
}

/// Binning used by the KL and JS scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bin_count: usize,
    pub range: (f64, f64),
    /// Probability mass added to every bin before renormalising.
    pub smoothing_epsilon: f64,
    #[serde(default)]
    pub log_base: LogBase,
}

impl HistogramSpec {
    pub const DEFAULT_BINS: usize = 50;
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    /// 50 uniform bins over `space`, epsilon 1e-6, natural log.
    pub fn over(space: &ActiveSpace) -> Self {
        Self {
            bin_count: Self::DEFAULT_BINS,
            range: (space.z_min(), space.z_max()),
            smoothing_epsilon: Self::DEFAULT_EPSILON,
            log_base: LogBase::Natural,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.range;
        if self.bin_count < 2 {
            return Err(Error::InvalidConfig("histogram needs >= 2 bins".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidConfig(format!(
                "histogram range [{lo}, {hi}] is empty"
            )));
        }
        if !(self.smoothing_epsilon > 0.0 && self.smoothing_epsilon.is_finite()) {
            return Err(Error::InvalidConfig("smoothing epsilon must be > 0".into()));
        }
        Ok(())
    }

    /// Bin of `v`; values outside the range land in the edge bins.
    pub fn bin_index(&self, v: f64) -> usize {
        let (lo, hi) = self.range;
        let t = ((v - lo) / (hi - lo) * self.bin_count as f64).floor();
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(self.bin_count - 1)
        }
    }
}

fn check_pair(metric: &'static str, pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: metric,
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::UndefinedMetric {
            metric,
            reason: "empty series".into(),
        });
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum()
}

/// Coefficient of determination `1 - SSE / sum((z - center)^2)`.
pub fn r_squared(pred: &[f64], truth: &[f64], variant: R2Variant) -> Result<f64> {
    check_pair("r2", pred, truth)?;
    let center = match variant {
        R2Variant::Standard => mean(truth),
        R2Variant::PredictionMean => mean(pred),
    };
    let denom: f64 = truth.iter().map(|t| (t - center) * (t - center)).sum();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "r2",
            reason: "ground truth has zero spread about the reference mean".into(),
        });
    }
    Ok(1.0 - sse(pred, truth) / denom)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair("rmse", pred, truth)?;
    Ok((sse(pred, truth) / pred.len() as f64).sqrt())
}

/// Pearson product-moment correlation.
pub fn pcc(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair("pcc", pred, truth)?;
    let (mp, mt) = (mean(pred), mean(truth));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let (dp, dt) = (p - mp, t - mt);
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "pcc",
            reason: "constant input".into(),
        });
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Maximum range of robustness `L / 2^N`.
pub fn r_max(length: f64, levels: usize) -> f64 {
    // Division by a power of two is exact in binary floating point.
    let mut r = length;
    for _ in 0..levels {
        r /= 2.0;
    }
    r
}

/// Smoothed, normalised histogram of `values` under `spec`.
pub fn histogram_pmf(values: &[f64], spec: &HistogramSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if values.is_empty() {
        return Err(Error::UndefinedMetric {
            metric: "histogram",
            reason: "empty series".into(),
        });
    }
    let mut counts = vec![0usize; spec.bin_count];
    for &v in values {
        counts[spec.bin_index(v)] += 1;
    }
    let n = values.len() as f64;
    let norm = 1.0 + spec.bin_count as f64 * spec.smoothing_epsilon;
    Ok(counts
        .into_iter()
        .map(|c| (c as f64 / n + spec.smoothing_epsilon) / norm)
        .collect())
}

/// `sum p log(p / q)` over bins with `p > 0`.
pub fn kl_divergence(p: &[f64], q: &[f64], base: LogBase) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "kl bins",
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::UndefinedMetric {
                    metric: "kl",
                    reason: "q has zero mass where p does not".into(),
                });
            }
            acc += pi * (pi / qi).ln();
        }
    }
    Ok((acc / base.ln_factor()).max(0.0))
}

/// `KL(p, m) / 2 + KL(q, m) / 2` with `m = (p + q) / 2`.
pub fn js_divergence(p: &[f64], q: &[f64], base: LogBase) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "js bins",
            expected: p.len(),
            found: q.len(),
        });
    }
    // Each bin's contribution is symmetric in (p, q), so js(a, b) == js(b, a)
    // holds bit for bit.
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = 0.5 * (pi + qi);
        let term = |x: f64| if x > 0.0 { x * (x / m).ln() } else { 0.0 };
        acc += 0.5 * (term(pi) + term(qi));
    }
    let cap = std::f64::consts::LN_2;
    Ok((acc.clamp(0.0, cap)) / base.ln_factor())
}

/// KL divergence between the binned predictions (`p`) and ground truth (`q`).
pub fn kl_score(pred: &[f64], truth: &[f64], spec: &HistogramSpec) -> Result<f64> {
    let p = histogram_pmf(pred, spec)?;
    let q = histogram_pmf(truth, spec)?;
    kl_divergence(&p, &q, spec.log_base)
}

pub fn js_score(pred: &[f64], truth: &[f64], spec: &HistogramSpec) -> Result<f64> {
    let p = histogram_pmf(pred, spec)?;
    let q = histogram_pmf(truth, spec)?;
    js_divergence(&p, &q, spec.log_base)
}

/// One row of the per-level evaluation table. Metrics that could not be
/// evaluated are `None`, with the reason in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub r2: Option<f64>,
    pub rmse: Option<f64>,
    pub pcc: Option<f64>,
    pub r_max: f64,
    pub kl_score: Option<f64>,
    pub js_score: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undefined: BTreeMap<String, String>,
}

impl MetricRow {
    pub const COLUMNS: [&'static str; 7] =
        ["N", "r2", "rmse", "pcc", "r_max", "kl_score", "js_score"];

    pub fn evaluate(
        n: usize,
        pred: &[f64],
        truth: &[f64],
        length: f64,
        spec: &HistogramSpec,
        variant: R2Variant,
    ) -> Self {
        let mut undefined = BTreeMap::new();
        let mut keep = |name: &str, r: Result<f64>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                undefined.insert(name.to_string(), e.to_string());
                None
            }
        };
        let r2 = keep("r2", r_squared(pred, truth, variant));
        let rmse = keep("rmse", rmse(pred, truth));
        let pcc = keep("pcc", pcc(pred, truth));
        let kl = keep("kl_score", kl_score(pred, truth, spec));
        let js = keep("js_score", js_score(pred, truth, spec));
        Self {
            n,
            r2,
            rmse,
            pcc,
            r_max: r_max(length, n),
            kl_score: kl,
            js_score: js,
            undefined,
        }
    }

    /// Values in [`Self::COLUMNS`] order; `None` for undefined metrics.
    pub fn values(&self) -> [Option<f64>; 7] {
        [
            Some(self.n as f64),
            self.r2,
            self.rmse,
            self.pcc,
            Some(self.r_max),
            self.kl_score,
            self.js_score,
        ]
    }
}

/// One [`MetricRow`] per correction level `0..=N`.
pub fn metric_table(
    trace: &CorrectionTrace,
    truth: &TrajectorySeries,
    spec: &HistogramSpec,
    variant: R2Variant,
) -> Result<Vec<MetricRow>> {
    spec.validate()?;
    let length = trace.root.width();
    trace
        .predictions
        .iter()
        .enumerate()
        .map(|(n, level)| {
            if level.len() != truth.len() {
                return Err(Error::DimensionMismatch {
                    what: "trace level length",
                    expected: truth.len(),
                    found: level.len(),
                });
            }
            Ok(MetricRow::evaluate(
                n,
                &level.positions,
                truth.positions(),
                length,
                spec,
                variant,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec() -> HistogramSpec {
        HistogramSpec::over(&ActiveSpace::new(0.0, 200.0).unwrap())
    }

    #[test]
    fn r2_cases() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r_squared(&t, &t, R2Variant::Standard).unwrap(), 1.0);
        let m = [2.5; 4];
        assert_abs_diff_eq!(r_squared(&m, &t, R2Variant::Standard).unwrap(), 0.0);
        assert!(matches!(
            r_squared(&t, &[3.0; 4], R2Variant::Standard),
            Err(Error::UndefinedMetric { .. })
        ));
        // Prediction-mean reference: center = 3.5, sum (t - 3.5)^2 = 9.
        let p = [2.0, 3.0, 4.0, 5.0];
        let lit = r_squared(&p, &t, R2Variant::PredictionMean).unwrap();
        assert_abs_diff_eq!(lit, 1.0 - 4.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn rmse_cases() {
        let t = [10.0, 20.0, 30.0];
        assert_eq!(rmse(&t, &t).unwrap(), 0.0);
        let shifted: Vec<f64> = t.iter().map(|v| v + 5.0).collect();
        assert_abs_diff_eq!(rmse(&shifted, &t).unwrap(), 5.0, epsilon = 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pcc_cases() {
        let t = [1.0, 4.0, 2.0, 8.0];
        assert_abs_diff_eq!(pcc(&t, &t).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = t.iter().map(|v| 100.0 - v).collect();
        assert_abs_diff_eq!(pcc(&neg, &t).unwrap(), -1.0, epsilon = 1e-15);
        assert!(pcc(&[2.0; 4], &t).is_err());
    }

    #[test]
    fn r_max_column() {
        assert_eq!(r_max(200.0, 0), 200.0);
        assert_eq!(r_max(200.0, 5), 6.25);
        assert_eq!(r_max(100.0, 2), 25.0);
    }

    #[test]
    fn kl_two_bin_case() {
        let kl = kl_divergence(&[0.5, 0.5], &[0.25, 0.75], LogBase::Natural).unwrap();
        let expect = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert_abs_diff_eq!(kl, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(kl, 0.1438, epsilon = 5e-5);
        let bits = kl_divergence(&[0.5, 0.5], &[0.25, 0.75], LogBase::Two).unwrap();
        assert_abs_diff_eq!(bits, expect / 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn js_disjoint_support_is_ln2() {
        let js = js_divergence(&[1.0, 0.0], &[0.0, 1.0], LogBase::Natural).unwrap();
        assert_abs_diff_eq!(js, std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn identical_sequences_score_zero() {
        let v: Vec<f64> = (0..500).map(|k| (k as f64 * 0.37) % 200.0).collect();
        assert!(kl_score(&v, &v, &spec()).unwrap().abs() < 1e-12);
        assert_eq!(js_score(&v, &v, &spec()).unwrap(), 0.0);
    }

    #[test]
    fn histogram_is_smoothed_and_normalised() {
        let pmf = histogram_pmf(&[0.0, 199.0, 250.0, -3.0], &spec()).unwrap();
        assert_eq!(pmf.len(), 50);
        assert_abs_diff_eq!(pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(pmf.iter().all(|p| *p > 0.0));
        assert!(pmf[0] > 0.4 && pmf[49] > 0.4);
    }

    #[test]
    fn bad_spec_rejected() {
        let mut s = spec();
        s.bin_count = 1;
        assert!(kl_score(&[1.0], &[1.0], &s).is_err());
        let mut s = spec();
        s.smoothing_epsilon = 0.0;
        assert!(js_score(&[1.0], &[1.0], &s).is_err());
    }

    #[test]
    fn undefined_metrics_become_none_with_reason() {
        let row = MetricRow::evaluate(1, &[5.0; 4], &[1.0, 2.0, 3.0, 4.0], 200.0, &spec(), R2Variant::Standard);
        assert!(row.pcc.is_none());
        assert!(row.undefined.contains_key("pcc"));
        assert!(row.rmse.is_some());
        assert_eq!(row.r_max, 100.0);
    }

    proptest! {
        #[test]
        fn divergences_bounded_and_js_symmetric(
            a in prop::collection::vec(0.0f64..200.0, 1..200),
            b in prop::collection::vec(0.0f64..200.0, 1..200),
        ) {
            let s = spec();
            let kl = kl_score(&a, &b, &s).unwrap();
            let js_ab = js_score(&a, &b, &s).unwrap();
            let js_ba = js_score(&b, &a, &s).unwrap();
            prop_assert!(kl >= 0.0);
            prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-12).contains(&js_ab));
            prop_assert_eq!(js_ab.to_bits(), js_ba.to_bits());
        }

        #[test]
        fn r2_never_exceeds_one(
            t in prop::collection::vec(-50.0f64..50.0, 2..100),
            noise in prop::collection::vec(-5.0f64..5.0, 100),
        ) {
            let p: Vec<f64> = t.iter().zip(&noise).map(|(a, b)| a + b).collect();
            if let Ok(r2) = r_squared(&p, &t, R2Variant::Standard) {
                prop_assert!(r2 <= 1.0);
            }
        }
    }
}
