//! Galton board simulation and the level-wise correspondence report that
//! treats every correction level as one row of pegs.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::correct::CorrectionTrace;
use crate::error::{Error, Result};
use crate::model::TrajectorySeries;
use crate::spectra::{count_modes, estimate_pdf, noise_series, Moments, PdfEstimate};
use crate::synth::seeded_rng;

const BOARD_STREAM: u64 = 0xB0A2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardConfig {
    pub rows: usize,
    pub balls: usize,
    pub right_prob: f64,
    pub seed: u64,
}

impl BoardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.balls == 0 {
            return Err(Error::InvalidConfig("board needs at least one ball".into()));
        }
        if !(0.0..=1.0).contains(&self.right_prob) {
            return Err(Error::InvalidConfig(format!(
                "right_prob {} not in [0, 1]",
                self.right_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardResult {
    /// `bin_counts[i]` balls ended with `i` right steps.
    pub bin_counts: Vec<u64>,
    pub empirical_pmf: Vec<f64>,
}

impl BoardResult {
    fn from_counts(bin_counts: Vec<u64>) -> Self {
        let total: u64 = bin_counts.iter().sum();
        let empirical_pmf = bin_counts
            .iter()
            .map(|c| *c as f64 / total as f64)
            .collect();
        Self {
            bin_counts,
            empirical_pmf,
        }
    }
}

/// Drops every ball through `rows` pegs, one Bernoulli step per peg.
pub fn simulate_board(cfg: &BoardConfig) -> Result<BoardResult> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed, BOARD_STREAM);
    let mut counts = vec![0u64; cfg.rows + 1];
    for _ in 0..cfg.balls {
        let rights = (0..cfg.rows)
            .filter(|_| rng.random_bool(cfg.right_prob))
            .count();
        counts[rights] += 1;
    }
    Ok(BoardResult::from_counts(counts))
}

/// Samples each ball's bin directly from the binomial; same distribution as
/// [`simulate_board`], different random stream.
pub fn simulate_board_direct(cfg: &BoardConfig) -> Result<BoardResult> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed, BOARD_STREAM);
    let binom = Binomial::new(cfg.rows as u64, cfg.right_prob)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut counts = vec![0u64; cfg.rows + 1];
    for _ in 0..cfg.balls {
        counts[binom.sample(&mut rng) as usize] += 1;
    }
    Ok(BoardResult::from_counts(counts))
}

/// Exact `Binomial(rows, p)` pmf.
///
/// Built by the ratio recurrence `P(i+1)/P(i) = (n-i)/(i+1) * p/(1-p)`
/// outward from the mode and normalised at the end, so nothing underflows
/// or overflows for large `rows`.
pub fn binomial_pmf(rows: usize, p: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("probability {p} not in [0, 1]")));
    }
    let n = rows;
    let mut pmf = vec![0.0; n + 1];
    if p == 0.0 {
        pmf[0] = 1.0;
        return Ok(pmf);
    }
    if p == 1.0 {
        pmf[n] = 1.0;
        return Ok(pmf);
    }
    let odds = p / (1.0 - p);
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    pmf[mode] = 1.0;
    for i in mode..n {
        pmf[i + 1] = pmf[i] * (n - i) as f64 / (i + 1) as f64 * odds;
    }
    for i in (0..mode).rev() {
        pmf[i] = pmf[i + 1] * (i + 1) as f64 / (n - i) as f64 / odds;
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|v| *v /= total);
    Ok(pmf)
}

/// Half the L1 distance between two pmfs.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "pmf length",
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Moment-matched normal density evaluated at the integers `0..=rows` and
/// renormalised over that support.
pub fn discretized_normal(rows: usize, p: f64) -> Result<Vec<f64>> {
    let mean = rows as f64 * p;
    let var = rows as f64 * p * (1.0 - p);
    if !(var > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "normal approximation needs rows >= 1 and 0 < p < 1 (rows={rows}, p={p})"
        )));
    }
    let dens: Vec<f64> = (0..=rows)
        .map(|i| {
            let d = i as f64 - mean;
            (-0.5 * d * d / var).exp()
        })
        .collect();
    let total: f64 = dens.iter().sum();
    Ok(dens.into_iter().map(|d| d / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClTPoint {
    pub rows: usize,
    /// `KL(binomial || discretised normal)` in nats.
    pub kl: f64,
}

/// KL between the exact binomial and its normal approximation at
/// `rows = 2, 4, 8, ...` up to `max_rows`.
pub fn clt_convergence_report(max_rows: usize, p: f64) -> Result<Vec<ClTPoint>> {
    if max_rows < 2 {
        return Err(Error::InvalidConfig("max_rows must be >= 2".into()));
    }
    let rows: Vec<usize> = std::iter::successors(Some(2usize), |r| r.checked_mul(2))
        .take_while(|r| *r <= max_rows)
        .collect();
    clt_points(&rows, p)
}

/// Same as [`clt_convergence_report`] for an explicit list of row counts.
pub fn clt_points(rows: &[usize], p: f64) -> Result<Vec<ClTPoint>> {
    rows.iter()
        .map(|&r| {
            let b = binomial_pmf(r, p)?;
            let g = discretized_normal(r, p)?;
            let kl = b
                .iter()
                .zip(&g)
                .filter(|(bi, _)| **bi > 0.0)
                .map(|(bi, gi)| bi * (bi / gi).ln())
                .sum::<f64>();
            Ok(ClTPoint { rows: r, kl })
        })
        .collect()
}

/// One peg row of the algorithm board: the bit decisions made at level `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitDecisionLevel {
    pub level: usize,
    /// Samples whose ground-truth bit was 1 (a "right" step).
    pub right_steps: usize,
    /// Samples whose prediction was reflected at this level.
    pub reflections: usize,
    /// After this level, how many samples have taken `i` right steps so far.
    pub path_bin_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub level: usize,
    pub pdf: PdfEstimate,
    pub modes: usize,
    pub moments: Option<Moments>,
    pub gaussian_screen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmBoardReport {
    pub bit_levels: Vec<BitDecisionLevel>,
    pub residuals: Vec<ResidualSummary>,
}

/// Packages a correction trace as a Galton-style record: per-level bit
/// decisions (the peg rows) and the residual distribution after each level.
pub fn algorithm_board_report(
    trace: &CorrectionTrace,
    truth: &TrajectorySeries,
    residual_bins: usize,
    min_prominence: f64,
) -> Result<AlgorithmBoardReport> {
    let k_len = truth.len();
    let mut rights_so_far = vec![0usize; k_len];
    let mut bit_levels = Vec::with_capacity(trace.depth());
    for (n, tb) in trace.truth_bits.iter().enumerate() {
        for (r, b) in rights_so_far.iter_mut().zip(tb.bits()) {
            *r += usize::from(*b);
        }
        let mut path_bin_counts = vec![0u64; n + 2];
        for r in &rights_so_far {
            path_bin_counts[*r] += 1;
        }
        bit_levels.push(BitDecisionLevel {
            level: n,
            right_steps: tb.count_ones(),
            reflections: trace.reflections(n),
            path_bin_counts,
        });
    }

    let width = trace.root.width();
    let residuals = trace
        .predictions
        .iter()
        .enumerate()
        .map(|(n, pred)| {
            let noise = noise_series(pred, truth)?;
            let (lo, hi) = noise
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                });
            let half = if hi > lo { lo.abs().max(hi.abs()) } else { width * 1e-6 };
            let pdf = estimate_pdf(&noise, residual_bins, (-half, half))?;
            let moments = Moments::of(&noise);
            Ok(ResidualSummary {
                level: n,
                modes: count_modes(&pdf, min_prominence),
                gaussian_screen: moments.is_some_and(|m| m.passes_gaussian_screen()),
                moments,
                pdf,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AlgorithmBoardReport {
        bit_levels,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correct::{correct_recursive, CorrectionConfig};
    use crate::model::{ActiveSpace, Axis, PredictionSeries};
    use approx::assert_abs_diff_eq;

    fn board(rows: usize, balls: usize, p: f64, seed: u64) -> BoardConfig {
        BoardConfig {
            rows,
            balls,
            right_prob: p,
            seed,
        }
    }

    #[test]
    fn no_pegs_means_bin_zero() {
        let r = simulate_board(&board(0, 100, 0.5, 1)).unwrap();
        assert_eq!(r.bin_counts, vec![100]);
    }

    #[test]
    fn certain_right_steps() {
        let r = simulate_board(&board(7, 50, 1.0, 1)).unwrap();
        assert_eq!(r.bin_counts[7], 50);
        assert_eq!(r.bin_counts.iter().sum::<u64>(), 50);
    }

    #[test]
    fn board_is_deterministic_and_conserves_balls() {
        let a = simulate_board(&board(10, 5000, 0.3, 9)).unwrap();
        let b = simulate_board(&board(10, 5000, 0.3, 9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bin_counts.iter().sum::<u64>(), 5000);
        assert_abs_diff_eq!(a.empirical_pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn direct_sampling_agrees_in_distribution() {
        let exact = binomial_pmf(12, 0.5).unwrap();
        let d = simulate_board_direct(&board(12, 100_000, 0.5, 3)).unwrap();
        assert!(total_variation(&d.empirical_pmf, &exact).unwrap() < 0.02);
    }

    #[test]
    fn small_pmfs() {
        assert_eq!(binomial_pmf(1, 0.5).unwrap(), vec![0.5, 0.5]);
        assert_eq!(binomial_pmf(2, 0.5).unwrap(), vec![0.25, 0.5, 0.25]);
        let p12 = binomial_pmf(12, 0.5).unwrap();
        assert_abs_diff_eq!(p12[6], 924.0 / 4096.0, epsilon = 1e-15);
        assert_eq!(binomial_pmf(3, 0.0).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(0, 0.3).unwrap(), vec![1.0]);
    }

    #[test]
    fn large_pmfs_sum_to_one() {
        for &p in &[0.5, 0.9, 0.01] {
            let pmf = binomial_pmf(1000, p).unwrap();
            assert_abs_diff_eq!(pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(pmf.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn clt_report_rows_double() {
        let rep = clt_convergence_report(64, 0.5).unwrap();
        let rows: Vec<usize> = rep.iter().map(|p| p.rows).collect();
        assert_eq!(rows, vec![2, 4, 8, 16, 32, 64]);
        assert!(rep.windows(2).all(|w| w[1].kl < w[0].kl));
        assert!(clt_convergence_report(1, 0.5).is_err());
    }

    #[test]
    fn skewed_board_converges_slower() {
        let fair = clt_points(&[4], 0.5).unwrap()[0].kl;
        let skew = clt_points(&[4], 0.9).unwrap()[0].kl;
        assert!(skew > fair);
    }

    #[test]
    fn report_shapes_follow_depth() {
        let space = ActiveSpace::new(0.0, 200.0).unwrap();
        let z: Vec<f64> = (0..400).map(|k| (k as f64 * 0.5) % 200.0).collect();
        let truth = TrajectorySeries::new(Axis::X, z.clone()).unwrap();
        let l0 = PredictionSeries::point_estimates(0, z.iter().map(|v| 200.0 - v).collect());

        let t0 = correct_recursive(&l0, &truth, &space, &CorrectionConfig::static_levels(0), None)
            .unwrap();
        let r0 = algorithm_board_report(&t0, &truth, 50, 0.1).unwrap();
        assert!(r0.bit_levels.is_empty());
        assert_eq!(r0.residuals.len(), 1);

        let t3 = correct_recursive(&l0, &truth, &space, &CorrectionConfig::static_levels(3), None)
            .unwrap();
        let r3 = algorithm_board_report(&t3, &truth, 50, 0.1).unwrap();
        assert_eq!(r3.bit_levels.len(), 3);
        assert_eq!(r3.residuals.len(), 4);
        for lvl in &r3.bit_levels {
            assert_eq!(lvl.path_bin_counts.len(), lvl.level + 2);
            assert_eq!(lvl.path_bin_counts.iter().sum::<u64>(), 400);
        }
    }
}
