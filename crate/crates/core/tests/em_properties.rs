use algoboard_core::decoder::{em_fit, kalman_filter, kalman_smoother, EMConfig, InitScheme};
use algoboard_core::synth::{
    emission_params, generate_observations, generate_trajectory, SimConfig, TrajectoryKind,
};
use algoboard_core::{ActiveSpace, Axis, ObservationMatrix, StateSpaceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space() -> ActiveSpace {
    ActiveSpace::new(0.0, 200.0).unwrap()
}

fn dataset(seed: u64, k: usize, m: usize, noise: f64) -> ObservationMatrix {
    let mut cfg = SimConfig::new(seed, k, m, space());
    cfg.obs_noise_std = noise;
    let traj = generate_trajectory(&cfg, Axis::X).unwrap();
    let params = emission_params(&cfg, m, Axis::X).unwrap();
    generate_observations(&traj, &params, seed).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng, m: usize, a: f64, init_mean: f64) -> StateSpaceParams {
    StateSpaceParams {
        weights: (0..m).map(|_| rng.random_range(-2.0..2.0)).collect(),
        offsets: (0..m).map(|_| rng.random_range(-5.0..5.0)).collect(),
        obs_noise_var: (0..m).map(|_| rng.random_range(0.5..2.0)).collect(),
        state_transition: a,
        state_noise_var: rng.random_range(0.1..1.0),
        init_mean,
        init_var: rng.random_range(0.5..2.0),
    }
}

fn loglik(obs: &ObservationMatrix, p: &StateSpaceParams) -> f64 {
    kalman_filter(obs, p).unwrap().loglik()
}

#[test]
fn negated_gains_with_reflected_latent_leave_likelihood_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let m = 4;
        let obs = ObservationMatrix::new(
            60,
            m,
            (0..60 * m).map(|_| rng.random_range(-10.0..10.0)).collect(),
        )
        .unwrap();

        // Centred space: reflection about 0 is negation, any transition works.
        let a = rng.random_range(-0.99..0.99);
        let mu0 = rng.random_range(-3.0..3.0);
        let p = random_params(&mut rng, m, a, mu0);
        let mut flipped = p.clone();
        flipped.weights.iter_mut().for_each(|c| *c = -*c);
        flipped.init_mean = -mu0;
        let (l1, l2) = (loglik(&obs, &p), loglik(&obs, &flipped));
        assert!((l1 - l2).abs() < 1e-9 * l1.abs().max(1.0), "{l1} vs {l2}");

        let s1 = kalman_smoother(&kalman_filter(&obs, &p).unwrap().series, &p).unwrap();
        let s2 = kalman_smoother(&kalman_filter(&obs, &flipped).unwrap().series, &flipped).unwrap();
        for (x, y) in s1.positions.iter().zip(&s2.positions) {
            assert!((x + y).abs() < 1e-9);
        }

        // Random-walk latent reflected about an arbitrary midpoint.
        let mid = rng.random_range(-50.0..50.0);
        let p = random_params(&mut rng, m, 1.0, mu0);
        let mut flipped = p.clone();
        for j in 0..m {
            flipped.offsets[j] = p.offsets[j] + 2.0 * p.weights[j] * mid;
            flipped.weights[j] = -p.weights[j];
        }
        flipped.init_mean = 2.0 * mid - mu0;
        let (l1, l2) = (loglik(&obs, &p), loglik(&obs, &flipped));
        assert!((l1 - l2).abs() < 1e-9 * l1.abs().max(1.0), "{l1} vs {l2}");
    }
}

#[test]
fn corrected_lls_loglik_is_monotone() {
    for (seed, noise) in (0..10).flat_map(|s| [(s, 40.0), (s, 1600.0)]) {
        let obs = dataset(seed, 1500, 8, noise);
        let cfg = EMConfig {
            max_iters: 100,
            seed,
            ..EMConfig::default()
        };
        let fit = em_fit(&obs, &space(), &cfg).unwrap();
        assert_eq!(fit.loglik_trace.len(), fit.iters_used);
        assert!(fit.iters_used >= 3, "seed {seed}: {} iterations", fit.iters_used);
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn pca_initialisation_converges() {
    let obs = dataset(5, 2000, 10, 40.0);
    let cfg = EMConfig {
        init_scheme: InitScheme::PcaFirstComponent,
        ..EMConfig::default()
    };
    let fit = em_fit(&obs, &space(), &cfg).unwrap();
    assert!(fit.iters_used >= 2);
    assert!(fit.loglik_trace.last() >= fit.loglik_trace.first());
}

#[test]
fn weights_recovered_up_to_sign() {
    let mut cfg = SimConfig::new(42, 10_000, 12, space());
    cfg.trajectory_kind = TrajectoryKind::SinusoidMixture;
    cfg.obs_noise_std = 5.0;
    cfg.weights_range = (0.5, 1.5);
    let traj = generate_trajectory(&cfg, Axis::X).unwrap();
    let mut truth = emission_params(&cfg, 12, Axis::X).unwrap();
    // Mixed signs make the global flip observable.
    for (j, w) in truth.weights.iter_mut().enumerate() {
        if j % 3 == 0 {
            *w = -*w;
        }
    }
    let obs = generate_observations(&traj, &truth, 42).unwrap();
    let fit = em_fit(&obs, &space(), &EMConfig::default()).unwrap();
    let est = fit.weights_in_space().unwrap();
    let sign = if est[0] * truth.weights[0] > 0.0 { 1.0 } else { -1.0 };
    let worst = est
        .iter()
        .zip(&truth.weights)
        .map(|(e, t)| (sign * e - t).abs() / t.abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "max relative deviation {worst}");
}
