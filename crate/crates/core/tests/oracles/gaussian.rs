//! Brute-force Gaussian conditioning over all latent states and observations
//! of a small linear-Gaussian state-space model.

use algoboard_core::{ObservationMatrix, StateSpaceParams};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Joint {
    pub mu_z: DVector<f64>,
    pub cov_z: DMatrix<f64>,
    pub mu_s: DVector<f64>,
    pub cov_s: DMatrix<f64>,
    /// Rows index latent steps, columns index observations (k * M + j).
    pub cov_zs: DMatrix<f64>,
}

pub fn joint(p: &StateSpaceParams, k_len: usize) -> Joint {
    let m = p.weights.len();
    let a = p.state_transition;
    let mut var = vec![p.init_var; k_len];
    let mut mu = vec![p.init_mean; k_len];
    for k in 1..k_len {
        var[k] = a * a * var[k - 1] + p.state_noise_var;
        mu[k] = a * mu[k - 1];
    }
    let cov_z = DMatrix::from_fn(k_len, k_len, |i, j| {
        let (lo, hi) = (i.min(j), i.max(j));
        a.powi((hi - lo) as i32) * var[lo]
    });
    let n = k_len * m;
    let mu_s = DVector::from_fn(n, |r, _| p.weights[r % m] * mu[r / m] + p.offsets[r % m]);
    let cov_s = DMatrix::from_fn(n, n, |r, c| {
        let (k, j) = (r / m, r % m);
        let (l, i) = (c / m, c % m);
        let noise = if r == c { p.obs_noise_var[j] } else { 0.0 };
        p.weights[j] * p.weights[i] * cov_z[(k, l)] + noise
    });
    let cov_zs = DMatrix::from_fn(k_len, n, |t, c| p.weights[c % m] * cov_z[(t, c / m)]);
    Joint {
        mu_z: DVector::from_vec(mu),
        cov_z,
        mu_s,
        cov_s,
        cov_zs,
    }
}

/// Posterior mean and variance of `z_t` given the first `upto` observation rows.
pub fn condition(j: &Joint, s: &DVector<f64>, m: usize, t: usize, upto: usize) -> (f64, f64) {
    let n = upto * m;
    let sss = j.cov_s.view((0, 0), (n, n)).into_owned();
    let szs = j.cov_zs.view((t, 0), (1, n)).into_owned();
    let resid = s.rows(0, n) - j.mu_s.rows(0, n);
    let chol = sss.cholesky().expect("joint covariance is positive definite");
    let gain = chol.solve(&szs.transpose());
    let mean = j.mu_z[t] + (gain.transpose() * resid)[(0, 0)];
    let var = j.cov_z[(t, t)] - (szs * gain)[(0, 0)];
    (mean, var)
}

#[allow(dead_code)]
pub fn joint_loglik(j: &Joint, s: &DVector<f64>) -> f64 {
    let n = s.len();
    let resid = s - &j.mu_s;
    let chol = j.cov_s.clone().cholesky().unwrap();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = resid.dot(&chol.solve(&resid));
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
}

pub fn random_case(rng: &mut ChaCha8Rng) -> (StateSpaceParams, ObservationMatrix) {
    let k_len = rng.random_range(1..=5);
    let m = rng.random_range(1..=3);
    let p = StateSpaceParams {
        weights: (0..m).map(|_| rng.random_range(-2.0..2.0)).collect(),
        offsets: (0..m).map(|_| rng.random_range(-1.0..1.0)).collect(),
        obs_noise_var: (0..m).map(|_| rng.random_range(0.1..2.0)).collect(),
        state_transition: rng.random_range(-1.2..1.2),
        state_noise_var: rng.random_range(0.1..2.0),
        init_mean: rng.random_range(-1.0..1.0),
        init_var: rng.random_range(0.1..3.0),
    };
    let values = (0..k_len * m).map(|_| rng.random_range(-3.0..3.0)).collect();
    (p, ObservationMatrix::new(k_len, m, values).unwrap())
}

