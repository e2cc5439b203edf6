//! Synthetic trajectories and linear-Gaussian observations.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded with `seed_from_u64` and
//! split into independent streams with `set_stream`, so a seed reproduces the
//! same data on every platform.

use std::f64::consts::TAU;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActiveSpace, Axis, ObservationMatrix, StateSpaceParams, TrajectorySeries};

const OFFSET_RANGE: (f64, f64) = (0.0, 20.0);
const SINUSOID_COMPONENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    /// Gaussian increments with specular reflection at the walls.
    BoundedRandomWalk,
    /// Sum of a few slow sinusoids, stretched to span the space exactly.
    SinusoidMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub k: usize,
    pub m: usize,
    pub space: ActiveSpace,
    /// Increment standard deviation of the random walk (cm). Zero yields a
    /// constant trajectory; unused by the sinusoid mixture.
    pub step_std: f64,
    pub weights_range: (f64, f64),
    pub obs_noise_std: f64,
    pub trajectory_kind: TrajectoryKind,
    /// Starting position; defaults to the midpoint of `space`.
    pub start: Option<f64>,
}

impl SimConfig {
    /// Default dynamics and noise give a weak level-0 decode (R² below zero,
    /// |PCC| around 0.5 at K = 2×10⁴, M = 46) that the correction levels then
    /// repair.
    pub fn new(seed: u64, k: usize, m: usize, space: ActiveSpace) -> Self {
        Self {
            seed,
            k,
            m,
            space,
            step_std: 4.0,
            weights_range: (-1.5, 1.5),
            obs_noise_std: 1600.0,
            trajectory_kind: TrajectoryKind::BoundedRandomWalk,
            start: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 || self.m == 0 {
            return bad(format!("K and M must be >= 1 (K={}, M={})", self.k, self.m));
        }
        if !(self.step_std >= 0.0 && self.step_std.is_finite()) {
            return bad(format!("step_std must be >= 0, got {}", self.step_std));
        }
        if !(self.obs_noise_std > 0.0 && self.obs_noise_std.is_finite()) {
            return bad(format!("obs_noise_std must be > 0, got {}", self.obs_noise_std));
        }
        let (lo, hi) = self.weights_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("weights_range [{lo}, {hi}] is not an interval"));
        }
        if let Some(s) = self.start {
            if !self.space.contains(s) {
                return bad(format!("start {s} outside {}", self.space));
            }
        }
        Ok(())
    }

    fn start(&self) -> f64 {
        self.start.unwrap_or_else(|| self.space.mid())
    }
}

mod stream {
    pub const TRAJECTORY_X: u64 = 1;
    pub const TRAJECTORY_Y: u64 = 2;
    pub const PARAMS_X: u64 = 3;
    pub const PARAMS_Y: u64 = 4;
    pub const OBS_X: u64 = 5;
    pub const OBS_Y: u64 = 6;
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Folds `z` back into `[lo, hi]` by repeated specular reflection.
pub fn reflect_into(z: f64, space: &ActiveSpace) -> f64 {
    let (lo, width) = (space.z_min(), space.width());
    let t = (z - lo).rem_euclid(2.0 * width);
    let folded = if t > width { 2.0 * width - t } else { t };
    space.clamp(lo + folded)
}

pub fn generate_trajectory(cfg: &SimConfig, axis: Axis) -> Result<TrajectorySeries> {
    cfg.validate()?;
    let stream = match axis {
        Axis::X => stream::TRAJECTORY_X,
        Axis::Y => stream::TRAJECTORY_Y,
    };
    let mut rng = seeded_rng(cfg.seed, stream);
    let positions = match cfg.trajectory_kind {
        TrajectoryKind::BoundedRandomWalk => random_walk(cfg, &mut rng),
        TrajectoryKind::SinusoidMixture => sinusoid_mixture(cfg, &mut rng),
    };
    TrajectorySeries::new(axis, positions)
}

fn random_walk(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut z = cfg.start();
    let mut out = Vec::with_capacity(cfg.k);
    out.push(z);
    if cfg.step_std == 0.0 {
        out.resize(cfg.k, z);
        return out;
    }
    let step = Normal::new(0.0, cfg.step_std).expect("validated step_std");
    for _ in 1..cfg.k {
        z = reflect_into(z + step.sample(rng), &cfg.space);
        out.push(z);
    }
    out
}

fn sinusoid_mixture(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let comps: Vec<(f64, f64, f64)> = (0..SINUSOID_COMPONENTS)
        .map(|_| {
            let period = rng.random_range(200.0..2000.0);
            let amp = rng.random_range(0.5..1.0);
            let phase = rng.random_range(0.0..TAU);
            (TAU / period, amp, phase)
        })
        .collect();
    let raw: Vec<f64> = (0..cfg.k)
        .map(|k| {
            comps
                .iter()
                .map(|(w, a, p)| a * (w * k as f64 + p).sin())
                .sum()
        })
        .collect();
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    if hi - lo <= 0.0 {
        return vec![cfg.space.mid(); cfg.k];
    }
    let scale = cfg.space.width() / (hi - lo);
    raw.iter()
        .map(|v| cfg.space.clamp(cfg.space.z_min() + (v - lo) * scale))
        .collect()
}

/// Random emission parameters for `m` neurons tuned to one axis.
pub fn emission_params(cfg: &SimConfig, m: usize, axis: Axis) -> Result<StateSpaceParams> {
    cfg.validate()?;
    let stream = match axis {
        Axis::X => stream::PARAMS_X,
        Axis::Y => stream::PARAMS_Y,
    };
    let mut rng = seeded_rng(cfg.seed, stream);
    let (lo, hi) = cfg.weights_range;
    let weights = (0..m)
        .map(|_| if lo < hi { rng.random_range(lo..hi) } else { lo })
        .collect();
    let offsets = (0..m)
        .map(|_| rng.random_range(OFFSET_RANGE.0..OFFSET_RANGE.1))
        .collect();
    Ok(StateSpaceParams {
        weights,
        offsets,
        obs_noise_var: vec![cfg.obs_noise_std * cfg.obs_noise_std; m],
        state_transition: 1.0,
        state_noise_var: (cfg.step_std * cfg.step_std).max(1e-12),
        init_mean: cfg.start(),
        init_var: 1.0,
    })
}

/// Emits `S_k = weights * z_k + offsets + noise` for every time bin.
///
/// The noise stream depends on `seed` and on the trajectory's axis.
pub fn generate_observations(
    traj: &TrajectorySeries,
    params: &StateSpaceParams,
    seed: u64,
) -> Result<ObservationMatrix> {
    let m = params.n_neurons();
    if m == 0 {
        return Err(Error::InvalidConfig("emission model has no neurons".into()));
    }
    params.validate(m)?;
    let stream = match traj.axis() {
        Axis::X => stream::OBS_X,
        Axis::Y => stream::OBS_Y,
    };
    let mut rng = seeded_rng(seed, stream);
    let noise: Vec<Normal<f64>> = params
        .obs_noise_var
        .iter()
        .map(|v| Normal::new(0.0, v.sqrt()).expect("validated variance"))
        .collect();
    let mut values = Vec::with_capacity(traj.len() * m);
    for &z in traj.positions() {
        for j in 0..m {
            values.push(params.weights[j] * z + params.offsets[j] + noise[j].sample(&mut rng));
        }
    }
    ObservationMatrix::new(traj.len(), m, values)
}

/// Two-axis dataset whose neuron population is split between the axes.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub x: TrajectorySeries,
    pub y: TrajectorySeries,
    pub obs: ObservationMatrix,
    pub x_params: StateSpaceParams,
    pub y_params: StateSpaceParams,
    pub x_columns: Range<usize>,
    pub y_columns: Range<usize>,
}

impl SyntheticDataset {
    pub fn trajectory(&self, axis: Axis) -> &TrajectorySeries {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }

    pub fn columns(&self, axis: Axis) -> Range<usize> {
        match axis {
            Axis::X => self.x_columns.clone(),
            Axis::Y => self.y_columns.clone(),
        }
    }

    pub fn params(&self, axis: Axis) -> &StateSpaceParams {
        match axis {
            Axis::X => &self.x_params,
            Axis::Y => &self.y_params,
        }
    }
}

/// Simulates both axes. The first `ceil(M/2)` neurons encode x and the rest
/// encode y, so `M >= 2` is required.
pub fn simulate_dataset(cfg: &SimConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    if cfg.m < 2 {
        return Err(Error::InvalidConfig(
            "a two-axis dataset needs M >= 2 neurons".into(),
        ));
    }
    let mx = cfg.m.div_ceil(2);
    let my = cfg.m - mx;
    let x = generate_trajectory(cfg, Axis::X)?;
    let y = generate_trajectory(cfg, Axis::Y)?;
    let x_params = emission_params(cfg, mx, Axis::X)?;
    let y_params = emission_params(cfg, my, Axis::Y)?;
    let ox = generate_observations(&x, &x_params, cfg.seed)?;
    let oy = generate_observations(&y, &y_params, cfg.seed)?;
    let mut values = Vec::with_capacity(cfg.k * cfg.m);
    for (rx, ry) in ox.iter_rows().zip(oy.iter_rows()) {
        values.extend_from_slice(rx);
        values.extend_from_slice(ry);
    }
    Ok(SyntheticDataset {
        x,
        y,
        obs: ObservationMatrix::new(cfg.k, cfg.m, values)?,
        x_params,
        y_params,
        x_columns: 0..mx,
        y_columns: mx..cfg.m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_dataset;

    fn cfg(seed: u64, k: usize) -> SimConfig {
        SimConfig::new(seed, k, 4, ActiveSpace::new(0.0, 200.0).unwrap())
    }

    #[test]
    fn zero_step_is_constant() {
        let mut c = cfg(1, 50);
        c.step_std = 0.0;
        c.start = Some(42.0);
        let t = generate_trajectory(&c, Axis::X).unwrap();
        assert!(t.positions().iter().all(|z| *z == 42.0));
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let a = generate_trajectory(&cfg(7, 1000), Axis::X).unwrap();
        let b = generate_trajectory(&cfg(7, 1000), Axis::X).unwrap();
        assert!(a
            .positions()
            .iter()
            .zip(b.positions())
            .all(|(p, q)| p.to_bits() == q.to_bits()));
        let c = generate_trajectory(&cfg(8, 1000), Axis::X).unwrap();
        assert_ne!(a.positions(), c.positions());
    }

    #[test]
    fn increments_match_step_std() {
        // Wide space so that reflections are rare and do not bias the
        // increment distribution.
        let mut c = cfg(11, 100_000);
        c.space = ActiveSpace::new(-1e6, 1e6).unwrap();
        c.step_std = 2.0;
        let t = generate_trajectory(&c, Axis::X).unwrap();
        let inc: Vec<f64> = t.positions().windows(2).map(|w| w[1] - w[0]).collect();
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
        assert!((var.sqrt() - 2.0).abs() < 0.05, "std {}", var.sqrt());
    }

    #[test]
    fn sinusoid_mixture_spans_space() {
        let mut c = cfg(3, 5000);
        c.trajectory_kind = TrajectoryKind::SinusoidMixture;
        let t = generate_trajectory(&c, Axis::Y).unwrap();
        let min = t.positions().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = t.positions().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert!((max - 200.0).abs() < 1e-9);
    }

    #[test]
    fn reflection_folds_far_values() {
        let s = ActiveSpace::new(0.0, 10.0).unwrap();
        assert_eq!(reflect_into(-3.0, &s), 3.0);
        assert_eq!(reflect_into(13.0, &s), 7.0);
        assert_eq!(reflect_into(23.0, &s), 3.0);
        assert_eq!(reflect_into(5.0, &s), 5.0);
    }

    fn identity_params(m: usize, var: f64) -> StateSpaceParams {
        StateSpaceParams {
            weights: vec![1.0; m],
            offsets: vec![0.0; m],
            obs_noise_var: vec![var; m],
            state_transition: 1.0,
            state_noise_var: 1.0,
            init_mean: 0.0,
            init_var: 1.0,
        }
    }

    #[test]
    fn noiseless_identity_emission() {
        let t = generate_trajectory(&cfg(2, 100), Axis::X).unwrap();
        let obs = generate_observations(&t, &identity_params(3, 1e-30), 5).unwrap();
        for (k, z) in t.positions().iter().enumerate() {
            for j in 0..3 {
                assert!((obs.get(k, j) - z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gain_ignores_trajectory() {
        let mut p = identity_params(2, 1.0);
        p.weights = vec![0.0; 2];
        p.offsets = vec![5.0, -5.0];
        let a = TrajectorySeries::new(Axis::X, vec![0.0; 20]).unwrap();
        let b = TrajectorySeries::new(Axis::X, vec![150.0; 20]).unwrap();
        let oa = generate_observations(&a, &p, 9).unwrap();
        let ob = generate_observations(&b, &p, 9).unwrap();
        assert_eq!(oa, ob);
    }

    #[test]
    fn noise_variance_matches_params() {
        let t = generate_trajectory(&cfg(4, 10_000), Axis::X).unwrap();
        let mut p = identity_params(5, 1.0);
        p.obs_noise_var = vec![0.5, 1.0, 4.0, 9.0, 25.0];
        let obs = generate_observations(&t, &p, 21).unwrap();
        for j in 0..5 {
            let resid: Vec<f64> = obs
                .column(j)
                .zip(t.positions())
                .map(|(s, z)| s - z)
                .collect();
            let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
            let rel = (var - p.obs_noise_var[j]).abs() / p.obs_noise_var[j];
            assert!(rel < 0.05, "column {j}: var {var}");
        }
    }

    #[test]
    fn non_positive_noise_rejected() {
        let t = TrajectorySeries::new(Axis::X, vec![1.0]).unwrap();
        let p = identity_params(1, 0.0);
        assert!(matches!(
            generate_observations(&t, &p, 0),
            Err(Error::NonPositiveVariance { .. })
        ));
    }

    #[test]
    fn dataset_validates_and_splits_columns() {
        let mut c = cfg(5, 500);
        c.m = 7;
        let ds = simulate_dataset(&c).unwrap();
        assert_eq!(ds.x_columns, 0..4);
        assert_eq!(ds.y_columns, 4..7);
        assert_eq!(ds.obs.cols(), 7);
        for axis in [Axis::X, Axis::Y] {
            assert!(validate_dataset(ds.trajectory(axis), &ds.obs, &c.space).passed());
        }
    }

    #[test]
    fn invalid_config_rejected_before_generation() {
        let mut c = cfg(1, 10);
        c.obs_noise_std = 0.0;
        assert!(generate_trajectory(&c, Axis::X).is_err());
        let mut c = cfg(1, 10);
        c.k = 0;
        assert!(generate_trajectory(&c, Axis::X).is_err());
    }
}
