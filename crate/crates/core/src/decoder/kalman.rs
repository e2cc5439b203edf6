//! Scalar-state Kalman filter and Rauch-Tung-Striebel smoother.
//!
//! The observation noise is diagonal, so each measurement update is done in
//! information form and the predictive log-density uses the matrix
//! determinant lemma and Woodbury identity instead of an `M x M` inverse.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{ObservationMatrix, PredictionSeries, StateSpaceParams};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    /// Filtered means `E[z_k | S_0..=k]` and variances.
    pub series: PredictionSeries,
    /// Log predictive density of each observation row.
    pub step_loglik: Vec<f64>,
}

impl FilterOutput {
    pub fn loglik(&self) -> f64 {
        neumaier_sum(self.step_loglik.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmootherOutput {
    pub series: PredictionSeries,
    /// `Cov(z_k, z_{k-1} | all data)` for `k = 1..K`; entry 0 is unused (0).
    pub lag_one_cov: Vec<f64>,
}

pub fn kalman_filter(obs: &ObservationMatrix, params: &StateSpaceParams) -> Result<FilterOutput> {
    params.validate(obs.cols())?;
    let k_len = obs.rows();
    let m = obs.cols();
    let a = params.state_transition;
    let q = params.state_noise_var;

    // Per-neuron precision-weighted gains are constant over time.
    let prec: Vec<f64> = params.obs_noise_var.iter().map(|r| 1.0 / r).collect();
    let info: f64 = params
        .weights
        .iter()
        .zip(&prec)
        .map(|(c, p)| c * c * p)
        .sum();
    let log_det_r: f64 = params.obs_noise_var.iter().map(|r| r.ln()).sum();
    let log_2pi_m = m as f64 * (2.0 * PI).ln();

    let mut means = Vec::with_capacity(k_len);
    let mut vars = Vec::with_capacity(k_len);
    let mut step_loglik = Vec::with_capacity(k_len);

    let (mut m_prev, mut p_prev) = (params.init_mean, params.init_var);
    for (k, row) in obs.iter_rows().enumerate() {
        let (m_pred, p_pred) = if k == 0 {
            (m_prev, p_prev)
        } else {
            (a * m_prev, a * a * p_prev + q)
        };

        // Innovation e_j = S_kj - d_j - c_j m_pred.
        let mut e_sq = 0.0;
        let mut c_e = 0.0;
        for j in 0..m {
            let e = row[j] - params.offsets[j] - params.weights[j] * m_pred;
            e_sq += e * e * prec[j];
            c_e += params.weights[j] * e * prec[j];
        }
        let s = 1.0 + p_pred * info;
        if !(s > 0.0 && s.is_finite() && p_pred > 0.0) {
            return Err(Error::SingularInnovation { step: k, value: s });
        }
        let p_post = p_pred / s;
        let m_post = m_pred + p_post * c_e;

        let quad = e_sq - p_pred * c_e * c_e / s;
        step_loglik.push(-0.5 * (log_2pi_m + log_det_r + s.ln() + quad));

        means.push(m_post);
        vars.push(p_post);
        m_prev = m_post;
        p_prev = p_post;
    }

    Ok(FilterOutput {
        series: PredictionSeries::new(0, means, vars)?,
        step_loglik,
    })
}

/// Backward pass over a filtered series. Returns smoothed means and variances.
pub fn kalman_smoother(
    filtered: &PredictionSeries,
    params: &StateSpaceParams,
) -> Result<PredictionSeries> {
    smooth(filtered, params).map(|out| out.series)
}

/// Like [`kalman_smoother`] but also returns the lag-one posterior
/// covariances required by the EM transition update.
pub fn smooth(filtered: &PredictionSeries, params: &StateSpaceParams) -> Result<SmootherOutput> {
    if filtered.positions.len() != filtered.covariances.len() {
        return Err(Error::DimensionMismatch {
            what: "filtered covariances",
            expected: filtered.positions.len(),
            found: filtered.covariances.len(),
        });
    }
    let n = filtered.len();
    if n == 0 {
        return Err(Error::InvalidConfig("cannot smooth an empty series".into()));
    }
    let a = params.state_transition;
    let q = params.state_noise_var;
    let mut means = filtered.positions.clone();
    let mut vars = filtered.covariances.clone();
    let mut lag_one_cov = vec![0.0; n];

    for k in (0..n - 1).rev() {
        let (mf, pf) = (filtered.positions[k], filtered.covariances[k]);
        let p_pred = a * a * pf + q;
        if !(p_pred > 0.0) {
            return Err(Error::Degenerate {
                sum: "a^2 P_k + q",
            });
        }
        let gain = a * pf / p_pred;
        means[k] = mf + gain * (means[k + 1] - a * mf);
        vars[k] = pf + gain * gain * (vars[k + 1] - p_pred);
        lag_one_cov[k + 1] = gain * vars[k + 1];
    }

    Ok(SmootherOutput {
        series: PredictionSeries::new(filtered.level, means, vars)?,
        lag_one_cov,
    })
}

/// Compensated summation; keeps long log-likelihood sums reproducible to
/// well below the EM convergence tolerance.
pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize) -> StateSpaceParams {
        StateSpaceParams {
            weights: vec![1.0; m],
            offsets: vec![0.0; m],
            obs_noise_var: vec![1.0; m],
            state_transition: 1.0,
            state_noise_var: 1.0,
            init_mean: 0.0,
            init_var: 1.0,
        }
    }

    #[test]
    fn flat_prior_single_observation_recovers_value() {
        let mut p = params(1);
        p.init_var = 1e12;
        p.obs_noise_var = vec![1e-12];
        let obs = ObservationMatrix::new(1, 1, vec![37.5]).unwrap();
        let out = kalman_filter(&obs, &p).unwrap();
        assert!((out.series.positions[0] - 37.5).abs() < 1e-9);
    }

    #[test]
    fn huge_state_noise_tracks_per_step_regression() {
        let mut p = params(3);
        p.weights = vec![2.0, -1.0, 0.5];
        p.offsets = vec![1.0, 3.0, -2.0];
        p.obs_noise_var = vec![1.0, 2.0, 0.5];
        p.state_noise_var = 1e9;
        p.init_var = 1e9;
        let rows = vec![
            vec![5.0, 1.0, -1.0],
            vec![-3.0, 4.0, -2.5],
            vec![10.0, -2.0, 0.3],
        ];
        let obs = ObservationMatrix::from_rows(&rows).unwrap();
        let out = kalman_filter(&obs, &p).unwrap();
        for (k, row) in rows.iter().enumerate() {
            // Weighted least squares readout of a single row.
            let (num, den) = (0..3).fold((0.0, 0.0), |(n, d), j| {
                let w = p.weights[j] / p.obs_noise_var[j];
                (n + w * (row[j] - p.offsets[j]), d + w * p.weights[j])
            });
            assert!((out.series.positions[k] - num / den).abs() < 1e-6);
        }
    }

    #[test]
    fn single_step_smoother_equals_filter() {
        let obs = ObservationMatrix::new(1, 2, vec![0.3, -0.2]).unwrap();
        let p = params(2);
        let f = kalman_filter(&obs, &p).unwrap();
        let s = kalman_smoother(&f.series, &p).unwrap();
        assert_eq!(f.series, s);
    }

    #[test]
    fn static_state_gives_constant_smoothed_path() {
        let mut p = params(2);
        p.state_noise_var = 1e-14;
        p.init_var = 100.0;
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|k| vec![(k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()])
            .collect();
        let obs = ObservationMatrix::from_rows(&rows).unwrap();
        let f = kalman_filter(&obs, &p).unwrap();
        let s = kalman_smoother(&f.series, &p).unwrap();
        let first = s.positions[0];
        assert!(s.positions.iter().all(|m| (m - first).abs() < 1e-6));
    }

    #[test]
    fn smoothed_variance_never_exceeds_filtered() {
        let mut p = params(2);
        p.state_transition = 0.9;
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|k| vec![(k as f64 * 0.1).sin(), (k as f64 * 0.3).cos()])
            .collect();
        let obs = ObservationMatrix::from_rows(&rows).unwrap();
        let f = kalman_filter(&obs, &p).unwrap();
        let s = kalman_smoother(&f.series, &p).unwrap();
        for (ps, pf) in s.covariances.iter().zip(&f.series.covariances) {
            assert!(ps <= pf);
        }
    }

    #[test]
    fn non_positive_variance_rejected() {
        let mut p = params(1);
        p.state_noise_var = 0.0;
        let obs = ObservationMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            kalman_filter(&obs, &p),
            Err(Error::NonPositiveVariance { .. })
        ));
    }

    #[test]
    fn overflowing_innovation_is_singular() {
        let mut p = params(1);
        p.init_var = 1e300;
        p.weights = vec![1e10];
        let obs = ObservationMatrix::new(1, 1, vec![1.0]).unwrap();
        assert!(matches!(
            kalman_filter(&obs, &p),
            Err(Error::SingularInnovation { step: 0, .. })
        ));
    }

    #[test]
    fn smoother_rejects_mismatched_lengths() {
        let bad = PredictionSeries {
            level: 0,
            positions: vec![0.0; 3],
            covariances: vec![1.0; 2],
        };
        assert!(matches!(
            kalman_smoother(&bad, &params(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn compensated_sum_is_exact_on_cancellation() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(neumaier_sum(v.iter().copied()), 1.0);
    }
}
