//! Stage orchestration. Every stage works in memory; files are written by
//! [`write_artifacts`] only after all requested stages have succeeded.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use algoboard_core::decoder::EmRedecoder;
use algoboard_core::galton::{
    algorithm_board_report, binomial_pmf, clt_convergence_report, simulate_board,
    simulate_board_direct, total_variation, AlgorithmBoardReport,
};
use algoboard_core::metrics::metric_table;
use algoboard_core::spectra::{count_modes, estimate_pdf, estimate_psd, noise_series, PsdEstimate};
use algoboard_core::synth::simulate_dataset;
use algoboard_core::{
    correct_recursive, em_fit, ActiveSpace, Axis, CorrectionMode, CorrectionTrace, EMResult,
    ObservationMatrix, Redecode, TrajectorySeries,
};

use crate::config::{BoardSampling, DataSource, Format, PipelineConfig};
use crate::figures::{self, AxisSeries, BoardSeries, FigureInputs};
use crate::ingest::{self, Dataset};
use crate::report::{
    CorrectionSummary, DatasetSummary, DecodingSummary, GaltonEntry, GaltonSummary, Reasons,
    Report, ResidualEntry, SeriesSpectra, SpectraSummary, REPORT_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Generate,
    Ingest,
    Decode,
    Correct,
    Evaluate,
    Spectra,
    Galton,
    Report,
    Plot,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Generate => "generate",
            Stage::Ingest => "ingest",
            Stage::Decode => "decode",
            Stage::Correct => "correct",
            Stage::Evaluate => "evaluate",
            Stage::Spectra => "spectra",
            Stage::Galton => "galton",
            Stage::Report => "report",
            Stage::Plot => "plot",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        Self {
            stage,
            message: message.to_string(),
        }
    }
}

trait StageExt<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

/// How far a run goes. Each goal includes the stages before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Goal {
    Decode,
    Correct,
    Evaluate,
    All,
}

/// Output files by name, held in memory until written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn insert(&mut self, name: impl Into<String>, text: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), text.into());
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: Report,
    pub artifacts: Artifacts,
    pub notices: Vec<String>,
}

/// Per-axis state carried between stages.
pub struct AxisRun {
    pub axis: Axis,
    pub truth: TrajectorySeries,
    pub obs: ObservationMatrix,
    pub columns: [usize; 2],
    pub fit: Option<EMResult>,
    pub trace: Option<CorrectionTrace>,
    pub board: Option<AlgorithmBoardReport>,
}

/// Synthetic data from the config's generator, or the configured CSV files.
pub fn load_dataset(cfg: &PipelineConfig) -> Result<(Dataset, BTreeMap<Axis, [usize; 2]>), PipelineError> {
    let space = cfg.space().at(Stage::Config)?;
    let (data, defaults) = match cfg.data.source {
        DataSource::Synthetic => {
            let ds = simulate_dataset(&cfg.sim_config().at(Stage::Config)?).at(Stage::Generate)?;
            let cols = |r: &std::ops::Range<usize>| [r.start, r.end];
            let defaults = BTreeMap::from([(Axis::X, cols(&ds.x_columns)), (Axis::Y, cols(&ds.y_columns))]);
            (Dataset { x: ds.x, y: ds.y, obs: ds.obs }, defaults)
        }
        DataSource::Csv => {
            let (pos, spk) = match (&cfg.data.positions, &cfg.data.spikes) {
                (Some(p), Some(s)) => (p, s),
                _ => return Err(PipelineError::new(Stage::Config, "csv source needs positions and spikes paths")),
            };
            let ds = ingest::ingest_csv(pos, spk, &space).at(Stage::Ingest)?;
            let all = [0, ds.obs.cols()];
            (ds, BTreeMap::from([(Axis::X, all), (Axis::Y, all)]))
        }
    };
    let mut columns = BTreeMap::new();
    for axis in [Axis::X, Axis::Y] {
        let c = cfg.data.columns(axis).unwrap_or(defaults[&axis]);
        if c[1] > data.obs.cols() || c[0] >= c[1] {
            return Err(PipelineError::new(
                Stage::Config,
                format!(
                    "{}_columns [{}, {}) does not fit M = {}",
                    axis.label(),
                    c[0],
                    c[1],
                    data.obs.cols()
                ),
            ));
        }
        columns.insert(axis, c);
    }
    Ok((data, columns))
}

/// Runs the configured stages up to `goal` without touching the filesystem.
pub fn execute(cfg: &PipelineConfig, goal: Goal) -> Result<PipelineRun, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    let space = cfg.space().at(Stage::Config)?;
    let mut report = Report::new(cfg);
    let mut artifacts = Artifacts::default();
    let mut notices = Vec::new();

    let (data, columns) = load_dataset(cfg)?;
    report.dataset = Some(DatasetSummary {
        source: cfg.data.source,
        k: data.obs.rows(),
        m: data.obs.cols(),
        columns: columns.iter().map(|(a, c)| (a.label().to_string(), *c)).collect(),
    });

    let mut runs: Vec<AxisRun> = Vec::new();
    for &axis in &cfg.axes {
        let c = columns[&axis];
        runs.push(AxisRun {
            axis,
            truth: data.trajectory(axis).clone(),
            obs: data.obs.select_columns(c[0]..c[1]).at(Stage::Decode)?,
            columns: c,
            fit: None,
            trace: None,
            board: None,
        });
    }

    for run in &mut runs {
        let a = run.axis.label();
        let fit = em_fit(&run.obs, &space, &cfg.em).map_err(|e| PipelineError::new(Stage::Decode, format!("{a}: {e}")))?;
        report.log.extend(fit.log.iter().map(|l| format!("{a}: em: {l}")));
        report.decoding.insert(a.to_string(), decoding_summary(&fit));
        run.fit = Some(fit);
    }
    if goal == Goal::Decode {
        if cfg.wants(Format::Csv) {
            for run in &runs {
                artifacts.insert(format!("decoded_{}.csv", run.axis.label()), decoded_csv(run));
                artifacts.insert(format!("loglik_{}.csv", run.axis.label()), loglik_csv(run));
            }
        }
        return finish(cfg, report, artifacts, notices);
    }

    for run in &mut runs {
        let a = run.axis.label();
        let fit = run.fit.as_ref().expect("decoded");
        let redecoder = EmRedecoder { obs: &run.obs, cfg: cfg.em.clone() };
        let hook: Option<&dyn Redecode> = match cfg.correction.mode {
            CorrectionMode::Refit => Some(&redecoder),
            CorrectionMode::Static => None,
        };
        let trace = correct_recursive(&fit.prediction, &run.truth, &space, &cfg.correction_config(), hook)
            .map_err(|e| PipelineError::new(Stage::Correct, format!("{a}: {e}")))?;
        for ev in &trace.events {
            report.log.push(format!("{a}: correct: level {}: {:?} x{}", ev.level, ev.kind, ev.count));
        }
        report.correction.insert(
            a.to_string(),
            CorrectionSummary {
                reflections: (0..trace.depth()).map(|n| trace.reflections(n)).collect(),
                events: trace.events.clone(),
            },
        );
        run.trace = Some(trace);
    }
    if cfg.correction.n_max == 0 {
        notices.push("correction depth 0: no correction plots".into());
        report.log.push("correct: depth 0, only level-0 predictions reported".into());
    }
    if cfg.wants(Format::Csv) {
        for run in &runs {
            artifacts.insert(format!("trajectory_{}.csv", run.axis.label()), trajectory_csv(run));
            artifacts.insert(format!("loglik_{}.csv", run.axis.label()), loglik_csv(run));
        }
    }
    if goal == Goal::Correct {
        return finish(cfg, report, artifacts, notices);
    }

    let spec = cfg.histogram_spec().at(Stage::Evaluate)?;
    for run in &runs {
        let a = run.axis.label();
        let rows = metric_table(run.trace.as_ref().expect("corrected"), &run.truth, &spec, cfg.metrics.r2_variant)
            .map_err(|e| PipelineError::new(Stage::Evaluate, format!("{a}: {e}")))?;
        for row in &rows {
            for (metric, reason) in &row.undefined {
                report.log.push(format!("{a}: evaluate: N = {}: {metric} undefined: {reason}", row.n));
            }
        }
        if cfg.wants(Format::Csv) {
            artifacts.insert(format!("metrics_{a}.csv"), metrics_csv(&rows));
        }
        report.metric_rows.insert(a.to_string(), rows);
    }
    if goal == Goal::Evaluate {
        return finish(cfg, report, artifacts, notices);
    }

    for run in &mut runs {
        let a = run.axis.label();
        let trace = run.trace.as_ref().expect("corrected");
        let (summary, tables) = spectra_stage(cfg, &space, &run.truth, trace)
            .map_err(|e| PipelineError::new(Stage::Spectra, format!("{a}: {e}")))?;
        let board = algorithm_board_report(trace, &run.truth, cfg.spectra.residual_bins, cfg.spectra.min_prominence)
            .map_err(|e| PipelineError::new(Stage::Spectra, format!("{a}: {e}")))?;
        for entry in &summary.residuals {
            if !entry.gaussian_screen {
                report.log.push(format!(
                    "{a}: spectra: level {} residual fails the skewness/kurtosis screen",
                    entry.level
                ));
            }
        }
        if cfg.wants(Format::Csv) {
            for (name, text) in tables {
                artifacts.insert(format!("{name}_{a}.csv"), text);
            }
            artifacts.insert(format!("algorithm_board_{a}.csv"), board_csv(&board));
        }
        report.spectra_summaries.insert(a.to_string(), summary);
        run.board = Some(board);
    }

    if cfg.galton.enabled {
        let summary = galton_stage(cfg, &runs).at(Stage::Galton)?;
        if cfg.wants(Format::Csv) {
            artifacts.insert("galton.csv", galton_csv(&summary));
            artifacts.insert("galton_clt.csv", clt_csv(&summary));
        }
        report.galton = GaltonEntry::Ran(Box::new(summary));
    } else {
        report.galton = GaltonEntry::Skipped { skipped: "disabled in config".into() };
    }

    if cfg.wants(Format::Svg) {
        let inputs = figure_inputs(cfg, &space, &runs, &report);
        let figs = figures::render(&inputs);
        notices.extend(figs.notices);
        for (name, svg) in figs.files {
            artifacts.insert(name, svg);
        }
    }

    finish(cfg, report, artifacts, notices)
}

/// Galton board on its own, as run by the `galton` verb.
pub fn execute_galton(cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let mut cfg = cfg.clone();
    cfg.galton.enabled = true;
    cfg.galton.board().validate().at(Stage::Config)?;
    let mut report = Report::new(&cfg);
    let mut artifacts = Artifacts::default();
    let summary = galton_stage(&cfg, &[]).at(Stage::Galton)?;
    if cfg.wants(Format::Csv) {
        artifacts.insert("galton.csv", galton_csv(&summary));
        artifacts.insert("galton_clt.csv", clt_csv(&summary));
    }
    if cfg.wants(Format::Svg) {
        let figs = figures::render(&FigureInputs {
            space: cfg.space().at(Stage::Config)?,
            bins: cfg.metrics.bins,
            residual_bins: cfg.spectra.residual_bins,
            segment_len: cfg.spectra.segment_len,
            overlap: cfg.spectra.overlap,
            axes: Vec::new(),
            galton: Some(BoardSeries {
                bin_counts: summary.bin_counts.clone(),
                binomial_pmf: summary.binomial_pmf.clone(),
            }),
        });
        for (name, svg) in figs.files {
            artifacts.insert(name, svg);
        }
    }
    report.galton = GaltonEntry::Ran(Box::new(summary));
    finish(&cfg, report, artifacts, Vec::new())
}

fn finish(
    cfg: &PipelineConfig,
    report: Report,
    mut artifacts: Artifacts,
    notices: Vec<String>,
) -> Result<PipelineRun, PipelineError> {
    if cfg.wants(Format::Json) {
        artifacts.insert(REPORT_FILE, report.to_json().at(Stage::Report)?);
    }
    Ok(PipelineRun { report, artifacts, notices })
}

/// Writes every artifact into `dir`. On failure, files written by this call
/// are removed again, and so is `dir` if this call created it.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<Vec<PathBuf>, PipelineError> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| PipelineError::new(Stage::Write, format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, bytes) in &artifacts.files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(PipelineError::new(Stage::Write, format!("{}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(written)
}

/// Full pipeline: every stage, then all artifacts written to the resolved
/// output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let run = execute(cfg, Goal::All)?;
    write_artifacts(&cfg.resolved_out_dir(), &run.artifacts)?;
    Ok(run)
}

fn decoding_summary(fit: &EMResult) -> DecodingSummary {
    let mut undefined = Reasons::new();
    let weights_in_space = fit.weights_in_space();
    if weights_in_space.is_none() {
        undefined.insert("weights_in_space".into(), "decoded latent is constant".into());
    }
    DecodingSummary {
        iters_used: fit.iters_used,
        final_loglik: *fit.loglik_trace.last().expect("at least one E-step"),
        params: fit.params.clone(),
        latent_to_space: fit.latent_to_space,
        weights_in_space,
        undefined,
    }
}

fn psd_entry(series: &[f64], cfg: &PipelineConfig) -> (Option<PsdEstimate>, Option<String>) {
    match estimate_psd(series, cfg.spectra.segment_len, cfg.spectra.overlap) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn series_spectra(
    series: &[f64],
    cfg: &PipelineConfig,
    space: &ActiveSpace,
) -> Result<(SeriesSpectra, Vec<f64>, Option<PsdEstimate>), algoboard_core::Error> {
    let pdf = estimate_pdf(series, cfg.metrics.bins, (space.z_min(), space.z_max()))?;
    let (psd, why) = psd_entry(series, cfg);
    let mut undefined = Reasons::new();
    if let Some(why) = why {
        undefined.insert("psd_peak_frequency".into(), why.clone());
        undefined.insert("psd_mean_power".into(), why);
    }
    let summary = SeriesSpectra {
        pdf_modes: count_modes(&pdf, cfg.spectra.min_prominence),
        psd_peak_frequency: psd.as_ref().map(PsdEstimate::peak_frequency),
        psd_mean_power: psd.as_ref().map(PsdEstimate::mean_power),
        undefined,
    };
    Ok((summary, pdf.densities, psd))
}

/// CSV table stems and their contents.
type CsvTables = Vec<(&'static str, String)>;

/// Spectral summary plus the CSV tables (`pdf`, `psd`, `residual_pdf`,
/// `residual_psd`) for one axis.
fn spectra_stage(
    cfg: &PipelineConfig,
    space: &ActiveSpace,
    truth: &TrajectorySeries,
    trace: &CorrectionTrace,
) -> Result<(SpectraSummary, CsvTables), algoboard_core::Error> {
    let (truth_summary, truth_pdf, truth_psd) = series_spectra(truth.positions(), cfg, space)?;
    let edges = estimate_pdf(truth.positions(), cfg.metrics.bins, (space.z_min(), space.z_max()))?.bin_edges;

    let mut levels = Vec::new();
    let mut level_pdfs = Vec::new();
    let mut level_psds = Vec::new();
    for pred in &trace.predictions {
        let (s, pdf, psd) = series_spectra(&pred.positions, cfg, space)?;
        levels.push(s);
        level_pdfs.push(pdf);
        level_psds.push(psd);
    }

    let mut residuals = Vec::new();
    let mut residual_pdf_rows = String::from("level,bin_lo,bin_hi,density\n");
    let mut residual_psds = Vec::new();
    for pred in &trace.predictions {
        let noise = noise_series(pred, truth)?;
        let pdf = figures::residual_pdf(&noise, cfg.spectra.residual_bins, space.width() * 1e-6)
            .expect("residual range is non-empty");
        for (i, d) in pdf.densities.iter().enumerate() {
            residual_pdf_rows.push_str(&format!("{},{},{},{}\n", pred.level, pdf.bin_edges[i], pdf.bin_edges[i + 1], d));
        }
        let moments = algoboard_core::spectra::Moments::of(&noise);
        let (psd, why) = psd_entry(&noise, cfg);
        let mut undefined = Reasons::new();
        if moments.is_none() {
            undefined.insert("moments".into(), "residual has zero spread".into());
        }
        if let Some(why) = why {
            undefined.insert("psd_mean_power".into(), why);
        }
        residuals.push(ResidualEntry {
            level: pred.level,
            pdf_modes: count_modes(&pdf, cfg.spectra.min_prominence),
            gaussian_screen: moments.is_some_and(|m| m.passes_gaussian_screen()),
            moments,
            psd_mean_power: psd.as_ref().map(PsdEstimate::mean_power),
            undefined,
        });
        residual_psds.push(psd);
    }

    let mut undefined = Reasons::new();
    if truth_psd.is_none() {
        undefined.insert("psd_method".into(), truth_summary.undefined["psd_mean_power"].clone());
    }
    let summary = SpectraSummary {
        psd_method: truth_psd.as_ref().map(|p| p.method_params.clone()),
        truth: truth_summary,
        levels,
        residuals,
        undefined,
    };

    let n_levels = trace.predictions.len();
    let level_header: String = (0..n_levels).map(|n| format!(",level_{n}")).collect();
    let mut pdf_csv = format!("bin_lo,bin_hi,truth{level_header}\n");
    for i in 0..truth_pdf.len() {
        pdf_csv.push_str(&format!("{},{},{}", edges[i], edges[i + 1], truth_pdf[i]));
        for l in &level_pdfs {
            pdf_csv.push_str(&format!(",{}", l[i]));
        }
        pdf_csv.push('\n');
    }
    let mut tables = vec![("pdf", pdf_csv), ("residual_pdf", residual_pdf_rows)];
    if let Some(tp) = &truth_psd {
        let mut psd_csv = format!("frequency,truth{level_header}\n");
        let mut res_csv = format!("frequency{level_header}\n");
        for (i, f) in tp.frequencies.iter().enumerate() {
            psd_csv.push_str(&format!("{f},{}", tp.powers[i]));
            res_csv.push_str(&f.to_string());
            for (l, r) in level_psds.iter().zip(&residual_psds) {
                let cell = |p: &Option<PsdEstimate>| p.as_ref().map_or(String::new(), |p| p.powers[i].to_string());
                psd_csv.push_str(&format!(",{}", cell(l)));
                res_csv.push_str(&format!(",{}", cell(r)));
            }
            psd_csv.push('\n');
            res_csv.push('\n');
        }
        tables.push(("psd", psd_csv));
        tables.push(("residual_psd", res_csv));
    }
    Ok((summary, tables))
}

fn galton_stage(cfg: &PipelineConfig, runs: &[AxisRun]) -> Result<GaltonSummary, algoboard_core::Error> {
    let g = &cfg.galton;
    let board = g.board();
    let result = match g.sampling {
        BoardSampling::BallByBall => simulate_board(&board)?,
        BoardSampling::Direct => simulate_board_direct(&board)?,
    };
    let exact = binomial_pmf(g.rows, g.right_prob)?;
    let tv = total_variation(&result.empirical_pmf, &exact)?;
    let clt = clt_convergence_report(g.clt_max_rows, g.right_prob)?;
    let algorithm_board = runs
        .iter()
        .filter_map(|r| r.board.as_ref().map(|b| (r.axis.label().to_string(), b.bit_levels.clone())))
        .collect();
    Ok(GaltonSummary {
        rows: g.rows,
        balls: g.balls,
        right_prob: g.right_prob,
        sampling: g.sampling,
        bin_counts: result.bin_counts,
        binomial_pmf: exact,
        tv_to_binomial: tv,
        clt,
        algorithm_board,
    })
}

fn figure_inputs(cfg: &PipelineConfig, space: &ActiveSpace, runs: &[AxisRun], report: &Report) -> FigureInputs {
    FigureInputs {
        space: *space,
        bins: cfg.metrics.bins,
        residual_bins: cfg.spectra.residual_bins,
        segment_len: cfg.spectra.segment_len,
        overlap: cfg.spectra.overlap,
        axes: runs
            .iter()
            .map(|r| AxisSeries {
                label: r.axis.label().to_string(),
                truth: r.truth.positions().to_vec(),
                levels: r
                    .trace
                    .as_ref()
                    .map(|t| t.predictions.iter().map(|p| p.positions.clone()).collect())
                    .unwrap_or_default(),
                board: r.board.as_ref().map(|b| b.bit_levels.clone()).unwrap_or_default(),
            })
            .collect(),
        galton: match &report.galton {
            GaltonEntry::Ran(g) => Some(BoardSeries {
                bin_counts: g.bin_counts.clone(),
                binomial_pmf: g.binomial_pmf.clone(),
            }),
            GaltonEntry::Skipped { .. } => None,
        },
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn metrics_csv(rows: &[algoboard_core::metrics::MetricRow]) -> String {
    let mut out = algoboard_core::metrics::MetricRow::COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let vals = row.values();
        let cells: Vec<String> = std::iter::once(row.n.to_string())
            .chain(vals[1..].iter().map(|v| cell(*v)))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn decoded_csv(run: &AxisRun) -> String {
    let fit = run.fit.as_ref().expect("decoded");
    let mut out = String::from("t,truth,level_0,variance\n");
    let p = &fit.prediction;
    for (k, z) in run.truth.positions().iter().enumerate() {
        out.push_str(&format!("{k},{z},{},{}\n", p.positions[k], p.covariances[k]));
    }
    out
}

/// `t,truth,level_0,...,level_N`; the `plot` verb reads this back.
fn trajectory_csv(run: &AxisRun) -> String {
    let trace = run.trace.as_ref().expect("corrected");
    let mut out = String::from("t,truth");
    for n in 0..trace.predictions.len() {
        out.push_str(&format!(",level_{n}"));
    }
    out.push('\n');
    for (k, z) in run.truth.positions().iter().enumerate() {
        out.push_str(&format!("{k},{z}"));
        for p in &trace.predictions {
            out.push_str(&format!(",{}", p.positions[k]));
        }
        out.push('\n');
    }
    out
}

fn loglik_csv(run: &AxisRun) -> String {
    let fit = run.fit.as_ref().expect("decoded");
    let mut out = String::from("iteration,loglik\n");
    for (i, l) in fit.loglik_trace.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

fn board_csv(board: &AlgorithmBoardReport) -> String {
    let mut out = String::from("level,right_steps_so_far,samples\n");
    for lvl in &board.bit_levels {
        for (i, c) in lvl.path_bin_counts.iter().enumerate() {
            out.push_str(&format!("{},{i},{c}\n", lvl.level));
        }
    }
    out
}

fn galton_csv(g: &GaltonSummary) -> String {
    let total: u64 = g.bin_counts.iter().sum();
    let mut out = String::from("bin,count,empirical,binomial\n");
    for (i, c) in g.bin_counts.iter().enumerate() {
        out.push_str(&format!("{i},{c},{},{}\n", *c as f64 / total as f64, g.binomial_pmf[i]));
    }
    out
}

fn clt_csv(g: &GaltonSummary) -> String {
    let mut out = String::from("rows,kl\n");
    for p in &g.clt {
        out.push_str(&format!("{},{}\n", p.rows, p.kl));
    }
    out
}

/// Rebuilds every SVG from a finished run's `report.json` and
/// `trajectory_<axis>.csv` files.
pub fn replot(dir: &Path) -> Result<PipelineRun, PipelineError> {
    let report_path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&report_path)
        .map_err(|e| PipelineError::new(Stage::Plot, format!("{}: {e}", report_path.display())))?;
    let report: Report = serde_json::from_str(&text)
        .map_err(|e| PipelineError::new(Stage::Plot, format!("{}: {e}", report_path.display())))?;
    let cfg = &report.config_echo;
    let space = cfg.space().at(Stage::Plot)?;

    let mut axes = Vec::new();
    for axis in &cfg.axes {
        let a = axis.label();
        let path = dir.join(format!("trajectory_{a}.csv"));
        if !path.exists() {
            continue;
        }
        let (truth, levels) = read_trajectory_csv(&path).at(Stage::Plot)?;
        let board = match &report.galton {
            GaltonEntry::Ran(g) => g.algorithm_board.get(a).cloned().unwrap_or_default(),
            GaltonEntry::Skipped { .. } => Vec::new(),
        };
        axes.push(AxisSeries { label: a.to_string(), truth, levels, board });
    }
    let galton = match &report.galton {
        GaltonEntry::Ran(g) => Some(BoardSeries {
            bin_counts: g.bin_counts.clone(),
            binomial_pmf: g.binomial_pmf.clone(),
        }),
        GaltonEntry::Skipped { .. } => None,
    };
    if axes.is_empty() && galton.is_none() {
        return Err(PipelineError::new(
            Stage::Plot,
            format!("{} holds no trajectory tables or Galton results", dir.display()),
        ));
    }
    let figs = figures::render(&FigureInputs {
        space,
        bins: cfg.metrics.bins,
        residual_bins: cfg.spectra.residual_bins,
        segment_len: cfg.spectra.segment_len,
        overlap: cfg.spectra.overlap,
        axes,
        galton,
    });
    let mut artifacts = Artifacts::default();
    for (name, svg) in figs.files {
        artifacts.insert(name, svg);
    }
    Ok(PipelineRun { report, artifacts, notices: figs.notices })
}

fn read_trajectory_csv(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>), String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = reader.headers().map_err(|e| format!("{}: {e}", path.display()))?.clone();
    if headers.len() < 3 || &headers[1] != "truth" {
        return Err(format!("{}: unexpected header", path.display()));
    }
    let n_levels = headers.len() - 2;
    let mut truth = Vec::new();
    let mut levels = vec![Vec::new(); n_levels];
    for rec in reader.records() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, String> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("{}: line {line}: bad value in column {}", path.display(), i + 1))
        };
        truth.push(num(1)?);
        for (n, level) in levels.iter_mut().enumerate() {
            level.push(num(n + 2)?);
        }
    }
    Ok((truth, levels))
}
