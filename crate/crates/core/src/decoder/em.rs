//! Unsupervised EM fitting of the linear-Gaussian state-space model.
//!
//! The E-step is a Kalman filter followed by an RTS smoother. The M-step
//! re-estimates the emission gains and offsets (two selectable formulas,
//! see [`WeightUpdateMode`]), the per-neuron noise variances, the transition
//! scalar and its noise, and the initial state.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::kalman::{kalman_filter, smooth, SmootherOutput};
use crate::correct::Redecode;
use crate::error::{Error, Result};
use crate::model::{ActiveSpace, ObservationMatrix, PredictionSeries, StateSpaceParams};
use crate::synth::seeded_rng;

const INIT_TRANSITION: f64 = 0.99;
const VAR_FLOOR: f64 = 1e-12;
const DEGENERATE_REL: f64 = 1e-12;
const INIT_STREAM: u64 = 0x5EED;
const POWER_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    RandomSeeded,
    PcaFirstComponent,
}

/// Which gain formula the M-step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightUpdateMode {
    /// Denominator `sum(z^2 + P) - sum(z)`, without the factor `K` and the
    /// squared sum. Not a likelihood-ascent step.
    UnscaledDenominator,
    /// Standard least-squares M-step, denominator `K sum(z^2 + P) - (sum z)^2`.
    CorrectedLls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EMConfig {
    pub max_iters: usize,
    /// Stop once the log-likelihood gain drops below `loglik_tol * max(1, |L|)`.
    pub loglik_tol: f64,
    pub init_scheme: InitScheme,
    pub weight_update: WeightUpdateMode,
    pub seed: u64,
}

impl Default for EMConfig {
    fn default() -> Self {
        Self {
            max_iters: 300,
            loglik_tol: 1e-8,
            init_scheme: InitScheme::RandomSeeded,
            weight_update: WeightUpdateMode::CorrectedLls,
            seed: 0,
        }
    }
}

impl EMConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.loglik_tol > 0.0 && self.loglik_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "loglik_tol must be > 0, got {}",
                self.loglik_tol
            )));
        }
        Ok(())
    }
}

/// Map from latent coordinates into the active space: `z = scale * latent + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub shift: f64,
}

impl AffineMap {
    pub fn apply(&self, latent: f64) -> f64 {
        self.scale * latent + self.shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EMResult {
    /// Fitted parameters in latent coordinates.
    pub params: StateSpaceParams,
    /// Level-0 predictions, affinely mapped into the active space.
    pub prediction: PredictionSeries,
    pub loglik_trace: Vec<f64>,
    pub iters_used: usize,
    pub latent_to_space: AffineMap,
    pub log: Vec<String>,
}

impl EMResult {
    /// Emission gains expressed per centimetre of the active space. `None`
    /// when the decoded latent was constant.
    pub fn weights_in_space(&self) -> Option<Vec<f64>> {
        let s = self.latent_to_space.scale;
        (s != 0.0).then(|| self.params.weights.iter().map(|c| c / s).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightUpdate {
    pub weights: Vec<f64>,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDivergence {
    pub max_abs_weight_diff: f64,
    pub max_abs_offset_diff: f64,
}

struct Moments {
    k: f64,
    sum_z: f64,
    sum_z2p: f64,
    sum_s: Vec<f64>,
    sum_sz: Vec<f64>,
}

fn moments(obs: &ObservationMatrix, pred: &PredictionSeries) -> Result<Moments> {
    if pred.len() != obs.rows() {
        return Err(Error::DimensionMismatch {
            what: "prediction length",
            expected: obs.rows(),
            found: pred.len(),
        });
    }
    let m = obs.cols();
    let mut sum_s = vec![0.0; m];
    let mut sum_sz = vec![0.0; m];
    for (row, &z) in obs.iter_rows().zip(&pred.positions) {
        for j in 0..m {
            sum_s[j] += row[j];
            sum_sz[j] += row[j] * z;
        }
    }
    Ok(Moments {
        k: obs.rows() as f64,
        sum_z: pred.positions.iter().sum(),
        sum_z2p: pred
            .positions
            .iter()
            .zip(&pred.covariances)
            .map(|(z, p)| z * z + p)
            .sum(),
        sum_s,
        sum_sz,
    })
}

/// Gain and offset re-estimation from posterior moments of the latent state.
///
/// For neuron `j` the gain is
/// `(K sum(S_j z) - sum(z) sum(S_j)) / D` and the offset is
/// `(sum(S_j) - gain sum(z)) / K`, where `D` depends on `mode`.
pub fn update_weights(
    obs: &ObservationMatrix,
    pred: &PredictionSeries,
    mode: WeightUpdateMode,
) -> Result<WeightUpdate> {
    let mo = moments(obs, pred)?;
    let (den, scale, name) = match mode {
        WeightUpdateMode::CorrectedLls => (
            mo.k * mo.sum_z2p - mo.sum_z * mo.sum_z,
            mo.k * mo.sum_z2p,
            "K*sum(z^2 + P) - (sum z)^2",
        ),
        WeightUpdateMode::UnscaledDenominator => (
            mo.sum_z2p - mo.sum_z,
            mo.sum_z2p.abs() + mo.sum_z.abs(),
            "sum(z^2 + P) - sum(z)",
        ),
    };
    if !(den.abs() > DEGENERATE_REL * scale) {
        return Err(Error::Degenerate { sum: name });
    }
    let weights: Vec<f64> = mo
        .sum_s
        .iter()
        .zip(&mo.sum_sz)
        .map(|(s, sz)| (mo.k * sz - mo.sum_z * s) / den)
        .collect();
    let offsets = mo
        .sum_s
        .iter()
        .zip(&weights)
        .map(|(s, c)| (s - c * mo.sum_z) / mo.k)
        .collect();
    Ok(WeightUpdate { weights, offsets })
}

/// Evaluates both gain formulas on the same moments and reports how far apart
/// they land.
pub fn compare_weight_updates(
    obs: &ObservationMatrix,
    pred: &PredictionSeries,
) -> Result<WeightDivergence> {
    let lit = update_weights(obs, pred, WeightUpdateMode::UnscaledDenominator)?;
    let lls = update_weights(obs, pred, WeightUpdateMode::CorrectedLls)?;
    let max_diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    Ok(WeightDivergence {
        max_abs_weight_diff: max_diff(&lit.weights, &lls.weights),
        max_abs_offset_diff: max_diff(&lit.offsets, &lls.offsets),
    })
}

pub fn log_likelihood(obs: &ObservationMatrix, params: &StateSpaceParams) -> Result<f64> {
    Ok(kalman_filter(obs, params)?.loglik())
}

/// Starting point for EM.
///
/// Offsets are column means and noise variances are column variances. Gains
/// are standard-normal draws scaled by each column's standard deviation
/// (`RandomSeeded`) or the leading principal axis
/// of the column covariance (`PcaFirstComponent`). The latent starts as a
/// unit-variance AR(1) process.
pub fn initial_params(obs: &ObservationMatrix, cfg: &EMConfig) -> Result<StateSpaceParams> {
    let m = obs.cols();
    let offsets = obs.column_means();
    let obs_noise_var: Vec<f64> = obs
        .column_variances()
        .into_iter()
        .map(|v| v.max(VAR_FLOOR))
        .collect();
    let mut rng = seeded_rng(cfg.seed, INIT_STREAM);
    let weights = match cfg.init_scheme {
        InitScheme::RandomSeeded => obs_noise_var
            .iter()
            .map(|v| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                xi * v.sqrt()
            })
            .collect(),
        InitScheme::PcaFirstComponent => {
            let start: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            leading_component(obs, &offsets, start)
        }
    };
    Ok(StateSpaceParams {
        weights,
        offsets,
        obs_noise_var,
        state_transition: INIT_TRANSITION,
        state_noise_var: 1.0 - INIT_TRANSITION * INIT_TRANSITION,
        init_mean: 0.0,
        init_var: 1.0,
    })
}

/// Power iteration on the column covariance; returns `v * sqrt(lambda)`.
fn leading_component(obs: &ObservationMatrix, means: &[f64], mut v: Vec<f64>) -> Vec<f64> {
    let m = obs.cols();
    let mut cov = vec![0.0; m * m];
    for row in obs.iter_rows() {
        for i in 0..m {
            let di = row[i] - means[i];
            for j in i..m {
                cov[i * m + j] += di * (row[j] - means[j]);
            }
        }
    }
    let n = obs.rows() as f64;
    for i in 0..m {
        for j in i..m {
            cov[i * m + j] /= n;
            cov[j * m + i] = cov[i * m + j];
        }
    }
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERS {
        let w: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| cov[i * m + j] * v[j]).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    let s = lambda.sqrt();
    v.into_iter().map(|x| x * s).collect()
}

/// Filter plus smoother under `params`; returns the smoothed posterior and
/// the log-likelihood of `obs`.
pub fn e_step(
    obs: &ObservationMatrix,
    params: &StateSpaceParams,
) -> Result<(SmootherOutput, f64)> {
    let filtered = kalman_filter(obs, params)?;
    let loglik = filtered.loglik();
    let smoothed = smooth(&filtered.series, params)?;
    Ok((smoothed, loglik))
}

/// Maximisation step given the smoothed posterior.
///
/// Noise variances use the standard residual formula
/// `R_j = mean_k[(S_kj - d_j - c_j m_k)^2 + c_j^2 P_k]`. The transition is the
/// regression of `z_k` on `z_{k-1}` under posterior expectations, and the
/// initial state is the smoothed posterior at `k = 0`.
pub fn m_step(
    obs: &ObservationMatrix,
    post: &SmootherOutput,
    prev: &StateSpaceParams,
    mode: WeightUpdateMode,
) -> Result<StateSpaceParams> {
    let s = &post.series;
    let WeightUpdate { weights, offsets } = update_weights(obs, s, mode)?;
    let k_len = obs.rows();
    let m = obs.cols();

    let mut resid = vec![0.0; m];
    for (row, (&z, &p)) in obs.iter_rows().zip(s.positions.iter().zip(&s.covariances)) {
        for j in 0..m {
            let e = row[j] - offsets[j] - weights[j] * z;
            resid[j] += e * e + weights[j] * weights[j] * p;
        }
    }
    let obs_noise_var = resid
        .into_iter()
        .map(|r| (r / k_len as f64).max(VAR_FLOOR))
        .collect();

    let (state_transition, state_noise_var) = if k_len > 1 {
        let mut cross = 0.0;
        let mut prev_sq = 0.0;
        let mut cur_sq = 0.0;
        for k in 1..k_len {
            cross += s.positions[k] * s.positions[k - 1] + post.lag_one_cov[k];
            prev_sq += s.positions[k - 1] * s.positions[k - 1] + s.covariances[k - 1];
            cur_sq += s.positions[k] * s.positions[k] + s.covariances[k];
        }
        if !(prev_sq > 0.0) {
            return Err(Error::Degenerate {
                sum: "sum E[z_{k-1}^2]",
            });
        }
        let a = cross / prev_sq;
        let q = (cur_sq - a * cross) / (k_len - 1) as f64;
        (a, q.max(VAR_FLOOR))
    } else {
        (prev.state_transition, prev.state_noise_var)
    };

    Ok(StateSpaceParams {
        weights,
        offsets,
        obs_noise_var,
        state_transition,
        state_noise_var,
        init_mean: s.positions[0],
        init_var: s.covariances[0].max(VAR_FLOOR),
    })
}

/// Runs EM from [`initial_params`] and maps the final smoothed latent path
/// onto `space` so its minimum and maximum touch the space boundaries.
///
/// `loglik_trace[i]` is the log-likelihood of the parameters entering
/// iteration `i`; `prediction` is the smoothed path from the last E-step.
pub fn em_fit(obs: &ObservationMatrix, space: &ActiveSpace, cfg: &EMConfig) -> Result<EMResult> {
    cfg.validate()?;
    em_fit_from(obs, space, cfg, initial_params(obs, cfg)?)
}

pub fn em_fit_from(
    obs: &ObservationMatrix,
    space: &ActiveSpace,
    cfg: &EMConfig,
    init: StateSpaceParams,
) -> Result<EMResult> {
    cfg.validate()?;
    init.validate(obs.cols())?;
    let mut params = init;
    let mut trace: Vec<f64> = Vec::new();
    let mut log = Vec::new();
    let mut last_post = None;

    for iter in 0..cfg.max_iters {
        let (post, loglik) = e_step(obs, &params)?;
        if !loglik.is_finite() {
            return Err(Error::NonFiniteLikelihood { iter });
        }
        let converged = trace
            .last()
            .is_some_and(|prev| loglik - prev < cfg.loglik_tol * prev.abs().max(1.0));
        if let Some(prev) = trace.last() {
            if loglik < *prev {
                log.push(format!(
                    "iteration {iter}: log-likelihood decreased by {:.3e}",
                    prev - loglik
                ));
            }
        }
        trace.push(loglik);
        if converged {
            last_post = Some(post);
            log.push(format!("converged after {} iterations", trace.len()));
            break;
        }
        params = m_step(obs, &post, &params, cfg.weight_update)?;
        last_post = Some(post);
    }
    let post = last_post.expect("max_iters >= 1");

    match compare_weight_updates(obs, &post.series) {
        Ok(d) => log.push(format!(
            "weight update divergence (unscaled-denominator vs corrected-lls): max |d gain| = {:.6e}, max |d offset| = {:.6e}",
            d.max_abs_weight_diff, d.max_abs_offset_diff
        )),
        Err(e) => log.push(format!("weight update comparison unavailable: {e}")),
    }

    let (prediction, latent_to_space) = rescale_into(&post.series, space, &mut log);
    Ok(EMResult {
        params,
        prediction,
        iters_used: trace.len(),
        loglik_trace: trace,
        latent_to_space,
        log,
    })
}

fn rescale_into(
    latent: &PredictionSeries,
    space: &ActiveSpace,
    log: &mut Vec<String>,
) -> (PredictionSeries, AffineMap) {
    let (lo, hi) = latent
        .positions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
            (lo.min(*z), hi.max(*z))
        });
    let map = if hi > lo {
        let scale = space.width() / (hi - lo);
        AffineMap {
            scale,
            shift: space.z_min() - lo * scale,
        }
    } else {
        log.push("decoded latent is constant; mapping every prediction to the midpoint".into());
        AffineMap {
            scale: 0.0,
            shift: space.mid(),
        }
    };
    let positions = latent
        .positions
        .iter()
        .map(|z| space.clamp(map.apply(*z)))
        .collect();
    let covariances = latent
        .covariances
        .iter()
        .map(|p| p * map.scale * map.scale)
        .collect();
    (
        PredictionSeries {
            level: 0,
            positions,
            covariances,
        },
        map,
    )
}

/// Re-runs EM on the samples of one subspace, mapping them into that subspace.
pub struct EmRedecoder<'a> {
    pub obs: &'a ObservationMatrix,
    pub cfg: EMConfig,
}

impl Redecode for EmRedecoder<'_> {
    fn redecode(&self, indices: &[usize], bounds: &ActiveSpace) -> Result<Vec<f64>> {
        let sub = self.obs.select_rows(indices)?;
        let fit = em_fit(&sub, bounds, &self.cfg).map_err(|e| Error::Redecode(e.to_string()))?;
        Ok(fit.prediction.positions)
    }
}
