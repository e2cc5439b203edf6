//! Histogram PMF, KL and JS by direct summation: explicit counting, bins
//! visited in reverse order, and JS built from two separate KL sums.

pub fn oracle_pmf(xs: &[f64], bins: usize, lo: f64, hi: f64, eps: f64) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins];
    for &x in xs {
        let mut i = 0;
        while i + 1 < bins && x >= lo + (i + 1) as f64 * width {
            i += 1;
        }
        counts[i] += 1.0;
    }
    let smoothed: Vec<f64> = counts.iter().map(|c| c / xs.len() as f64 + eps).collect();
    let total: f64 = smoothed.iter().sum();
    smoothed.iter().map(|v| v / total).collect()
}

pub fn oracle_kl(p: &[f64], q: &[f64]) -> f64 {
    (0..p.len()).rev().map(|i| p[i] * p[i].ln() - p[i] * q[i].ln()).sum()
}

pub fn oracle_js(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    0.5 * oracle_kl(p, &m) + 0.5 * oracle_kl(q, &m)
}
