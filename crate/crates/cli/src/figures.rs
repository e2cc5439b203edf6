//! Figure families rendered from plain series, so the same code serves a
//! fresh run and the `plot` verb reading a finished run back from disk.

use std::collections::BTreeMap;

use algoboard_core::galton::BitDecisionLevel;
use algoboard_core::spectra::{estimate_pdf, estimate_psd, PdfEstimate};
use algoboard_core::ActiveSpace;

use crate::plot::{bar_plot, bar_plot_with_reference, line_plot, scatter_plot, Series, YScale};

/// Samples shown in the trajectory overlay.
pub const OVERLAY_SAMPLES: usize = 2000;

#[derive(Debug, Clone)]
pub struct AxisSeries {
    pub label: String,
    pub truth: Vec<f64>,
    /// Predictions at levels `0..=N`.
    pub levels: Vec<Vec<f64>>,
    pub board: Vec<BitDecisionLevel>,
}

#[derive(Debug, Clone)]
pub struct BoardSeries {
    pub bin_counts: Vec<u64>,
    pub binomial_pmf: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FigureInputs {
    pub space: ActiveSpace,
    /// Bin count of the position PDF plots.
    pub bins: usize,
    pub residual_bins: usize,
    pub segment_len: usize,
    pub overlap: f64,
    pub axes: Vec<AxisSeries>,
    pub galton: Option<BoardSeries>,
}

pub struct Figures {
    /// File name to SVG text.
    pub files: BTreeMap<String, String>,
    pub notices: Vec<String>,
}

fn level_name(n: usize) -> String {
    format!("N = {n}")
}

/// Residual PDF over a symmetric range covering every residual.
pub fn residual_pdf(noise: &[f64], bins: usize, fallback_half_width: f64) -> Option<PdfEstimate> {
    let half = noise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let half = if half > 0.0 { half } else { fallback_half_width };
    estimate_pdf(noise, bins, (-half, half)).ok()
}

pub fn render(inputs: &FigureInputs) -> Figures {
    let mut files = BTreeMap::new();
    let mut notices = Vec::new();
    let range = (inputs.space.z_min(), inputs.space.z_max());

    for ax in &inputs.axes {
        let a = &ax.label;
        let depth = ax.levels.len().saturating_sub(1);
        if depth == 0 {
            notices.push(format!("{a}: correction depth 0, no correction plots"));
        }

        let shown = ax.truth.len().min(OVERLAY_SAMPLES);
        let t: Vec<f64> = (0..shown).map(|k| k as f64).collect();
        let mut overlay = vec![Series { name: "ground truth", xs: &t, ys: &ax.truth[..shown] }];
        let names: Vec<String> = [0, depth].iter().map(|n| level_name(*n)).collect();
        overlay.push(Series { name: &names[0], xs: &t, ys: &ax.levels[0][..shown] });
        if depth > 0 {
            overlay.push(Series { name: &names[1], xs: &t, ys: &ax.levels[depth][..shown] });
        }
        files.insert(
            format!("trajectory_{a}.svg"),
            line_plot(&format!("{a} trajectory"), "time bin", "position", &overlay, YScale::Linear),
        );

        for (n, level) in ax.levels.iter().enumerate() {
            files.insert(
                format!("scatter_{a}_n{n}.svg"),
                scatter_plot(&format!("{a}: {}", level_name(n)), &ax.truth, level, range),
            );
        }

        if let Ok(truth_pdf) = estimate_pdf(&ax.truth, inputs.bins, range) {
            files.insert(
                format!("pdf_{a}_truth.svg"),
                bar_plot(&format!("{a} ground truth PDF"), "position", "density", &truth_pdf.bin_edges, &truth_pdf.densities),
            );
            for (n, level) in ax.levels.iter().enumerate() {
                if let Ok(pdf) = estimate_pdf(level, inputs.bins, range) {
                    files.insert(
                        format!("pdf_{a}_n{n}.svg"),
                        bar_plot_with_reference(
                            &format!("{a} prediction PDF, {} (line: ground truth)", level_name(n)),
                            "position",
                            "density",
                            &pdf.bin_edges,
                            &pdf.densities,
                            &truth_pdf.densities,
                        ),
                    );
                }
            }
        }

        let level_names: Vec<String> = (0..ax.levels.len()).map(level_name).collect();
        match estimate_psd(&ax.truth, inputs.segment_len, inputs.overlap) {
            Ok(truth_psd) => {
                let psds: Vec<_> = ax
                    .levels
                    .iter()
                    .filter_map(|l| estimate_psd(l, inputs.segment_len, inputs.overlap).ok())
                    .collect();
                let mut series = vec![Series { name: "ground truth", xs: &truth_psd.frequencies, ys: &truth_psd.powers }];
                for (psd, name) in psds.iter().zip(&level_names) {
                    series.push(Series { name, xs: &psd.frequencies, ys: &psd.powers });
                }
                files.insert(
                    format!("psd_{a}.svg"),
                    line_plot(&format!("{a} PSD"), "cycles per time bin", "power", &series, YScale::Log10),
                );
            }
            Err(e) => notices.push(format!("{a}: PSD plots skipped: {e}")),
        }

        let noise: Vec<Vec<f64>> = ax
            .levels
            .iter()
            .map(|l| l.iter().zip(&ax.truth).map(|(p, z)| p - z).collect())
            .collect();
        let pdfs: Vec<_> = noise
            .iter()
            .filter_map(|n| residual_pdf(n, inputs.residual_bins, inputs.space.width() * 1e-6))
            .collect();
        let centers: Vec<Vec<f64>> = pdfs.iter().map(|p| p.bin_centers()).collect();
        let series: Vec<Series> = pdfs
            .iter()
            .zip(&centers)
            .zip(&level_names)
            .map(|((p, c), name)| Series { name, xs: c, ys: &p.densities })
            .collect();
        files.insert(
            format!("noise_pdf_{a}.svg"),
            line_plot(&format!("{a} prediction error PDF"), "prediction - truth", "density", &series, YScale::Linear),
        );
        let noise_psds: Vec<_> = noise
            .iter()
            .filter_map(|n| estimate_psd(n, inputs.segment_len, inputs.overlap).ok())
            .collect();
        if !noise_psds.is_empty() {
            let series: Vec<Series> = noise_psds
                .iter()
                .zip(&level_names)
                .map(|(p, name)| Series { name, xs: &p.frequencies, ys: &p.powers })
                .collect();
            files.insert(
                format!("noise_psd_{a}.svg"),
                line_plot(&format!("{a} prediction error PSD"), "cycles per time bin", "power", &series, YScale::Log10),
            );
        }

        if let Some(last) = ax.board.last() {
            let edges: Vec<f64> = (0..=last.path_bin_counts.len()).map(|i| i as f64 - 0.5).collect();
            let heights: Vec<f64> = last.path_bin_counts.iter().map(|c| *c as f64).collect();
            files.insert(
                format!("algorithm_board_{a}.svg"),
                bar_plot(
                    &format!("{a}: upper-half decisions after {} levels", last.level + 1),
                    "ground-truth 1-bits",
                    "samples",
                    &edges,
                    &heights,
                ),
            );
        }
    }

    if let Some(g) = &inputs.galton {
        let total: u64 = g.bin_counts.iter().sum();
        let pmf: Vec<f64> = g.bin_counts.iter().map(|c| *c as f64 / total.max(1) as f64).collect();
        let edges: Vec<f64> = (0..=pmf.len()).map(|i| i as f64 - 0.5).collect();
        files.insert(
            "galton.svg".into(),
            bar_plot_with_reference(
                "Galton board (line: binomial)",
                "right steps",
                "probability",
                &edges,
                &pmf,
                &g.binomial_pmf,
            ),
        );
    }

    Figures { files, notices }
}
