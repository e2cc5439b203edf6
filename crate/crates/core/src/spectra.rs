//! Histogram densities, averaged-periodogram PSDs and mode counting.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PredictionSeries, TrajectorySeries};

pub const DEFAULT_SEGMENT_LEN: usize = 256;
pub const DEFAULT_OVERLAP: f64 = 0.5;
pub const DEFAULT_MIN_PROMINENCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfEstimate {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub sample_count: usize,
}

impl PdfEstimate {
    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    /// `sum density * width`; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.bin_edges
            .windows(2)
            .zip(&self.densities)
            .map(|(w, d)| d * (w[1] - w[0]))
            .sum()
    }
}

/// Normalised histogram density of `series` over `range` with `bins` bins.
/// Samples outside `range` are counted in the edge bins.
pub fn estimate_pdf(series: &[f64], bins: usize, range: (f64, f64)) -> Result<PdfEstimate> {
    let (lo, hi) = range;
    if bins < 2 {
        return Err(Error::InvalidConfig("pdf needs >= 2 bins".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidConfig(format!("pdf range [{lo}, {hi}] is empty")));
    }
    if series.is_empty() {
        return Err(Error::InvalidConfig("pdf of an empty series".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in series {
        let t = ((v - lo) / width).floor();
        let i = if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(bins - 1)
        };
        counts[i] += 1;
    }
    let n = series.len() as f64;
    Ok(PdfEstimate {
        bin_edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
        densities: counts.iter().map(|c| *c as f64 / (n * width)).collect(),
        sample_count: series.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdParams {
    pub segment_len: usize,
    pub overlap_fraction: f64,
    pub window: String,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Cycles per time bin, `0..=0.5`.
    pub frequencies: Vec<f64>,
    pub powers: Vec<f64>,
    pub method_params: PsdParams,
}

impl PsdEstimate {
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .powers
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, p)| {
                if *p > bp {
                    (i, *p)
                } else {
                    (bi, bp)
                }
            });
        self.frequencies[i]
    }

    pub fn mean_power(&self) -> f64 {
        self.powers.iter().sum::<f64>() / self.powers.len() as f64
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided Welch PSD with a periodic Hann window, per-segment mean removal
/// and density scaling at unit sampling rate.
pub fn estimate_psd(series: &[f64], segment_len: usize, overlap_fraction: f64) -> Result<PsdEstimate> {
    if segment_len < 4 {
        return Err(Error::InvalidConfig(format!(
            "segment length {segment_len} < 4"
        )));
    }
    if segment_len > series.len() {
        return Err(Error::InvalidConfig(format!(
            "segment length {segment_len} exceeds series length {}",
            series.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidConfig(format!(
            "overlap fraction {overlap_fraction} not in [0, 1)"
        )));
    }
    let overlap = (segment_len as f64 * overlap_fraction).round() as usize;
    let hop = (segment_len - overlap).max(1);
    let window = hann(segment_len);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(segment_len);
    let n_freq = segment_len / 2 + 1;
    let mut acc = vec![0.0; n_freq];
    let mut buf = vec![Complex::new(0.0, 0.0); segment_len];
    let mut segments = 0;

    let mut start = 0;
    while start + segment_len <= series.len() {
        let seg = &series[start..start + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let nyquist_bin = segment_len.is_multiple_of(2).then_some(segment_len / 2);
    let powers = acc
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let one_sided = if i == 0 || Some(i) == nyquist_bin { 1.0 } else { 2.0 };
            one_sided * a / (segments as f64 * win_power)
        })
        .collect();
    Ok(PsdEstimate {
        frequencies: (0..n_freq).map(|i| i as f64 / segment_len as f64).collect(),
        powers,
        method_params: PsdParams {
            segment_len,
            overlap_fraction,
            window: "hann".into(),
            segments,
        },
    })
}

/// Counts local maxima of the 3-bin moving average of `pdf.densities` whose
/// prominence exceeds `min_prominence * max density`. The density is taken as
/// zero outside the histogram range, so edge maxima count.
pub fn count_modes(pdf: &PdfEstimate, min_prominence: f64) -> usize {
    let d = &pdf.densities;
    let n = d.len();
    if n == 0 {
        return 0;
    }
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            d[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let max = smooth.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    let threshold = min_prominence * max;
    let mut padded = Vec::with_capacity(n + 2);
    padded.push(0.0);
    padded.extend_from_slice(&smooth);
    padded.push(0.0);

    let mut modes = 0;
    let mut i = 1;
    while i <= n {
        if padded[i] > padded[i - 1] {
            // Walk across a plateau.
            let mut j = i;
            while j < n && padded[j + 1] == padded[i] {
                j += 1;
            }
            if padded[j + 1] < padded[i] && prominence(&padded, i, j) > threshold {
                modes += 1;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    modes
}

/// Height of the peak spanning `[i, j]` above the higher of the two lowest
/// points reached before climbing onto a taller peak on either side.
fn prominence(d: &[f64], i: usize, j: usize) -> f64 {
    let peak = d[i];
    let mut left_min = peak;
    for v in d[..i].iter().rev() {
        if *v > peak {
            break;
        }
        left_min = left_min.min(*v);
    }
    let mut right_min = peak;
    for v in &d[j + 1..] {
        if *v > peak {
            break;
        }
        right_min = right_min.min(*v);
    }
    peak - left_min.max(right_min)
}

/// Residuals `zhat_k - z_k`.
pub fn noise_series(pred: &PredictionSeries, truth: &TrajectorySeries) -> Result<Vec<f64>> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "noise series",
            expected: truth.len(),
            found: pred.len(),
        });
    }
    Ok(pred
        .positions
        .iter()
        .zip(truth.positions())
        .map(|(p, z)| p - z)
        .collect())
}

/// Sample moments used for the Gaussianity screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub const SKEW_LIMIT: f64 = 0.2;
    pub const KURTOSIS_LIMIT: f64 = 0.5;

    /// Population moments; `None` for fewer than two samples or zero spread.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.len() < 2 {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        if m2 <= 0.0 {
            return None;
        }
        Some(Self {
            mean,
            std: m2.sqrt(),
            skewness: m3 / m2.powf(1.5),
            excess_kurtosis: m4 / (m2 * m2) - 3.0,
        })
    }

    /// `|skew| < 0.2` and `|excess kurtosis| < 0.5`.
    pub fn passes_gaussian_screen(&self) -> bool {
        self.skewness.abs() < Self::SKEW_LIMIT && self.excess_kurtosis.abs() < Self::KURTOSIS_LIMIT
    }
}
