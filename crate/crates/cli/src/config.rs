//! Pipeline configuration: a TOML file, overridden field by field from the
//! command line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use algoboard_core::correct::MAX_LEVELS;
use algoboard_core::decoder::{InitScheme, WeightUpdateMode};
use algoboard_core::galton::BoardConfig;
use algoboard_core::metrics::{HistogramSpec, LogBase, R2Variant};
use algoboard_core::synth::{SimConfig, TrajectoryKind};
use algoboard_core::{ActiveSpace, Axis, CorrectionConfig, CorrectionMode, EMConfig};
use clap::Args;
use serde::{Deserialize, Serialize};

/// Environment variable naming the output directory when neither the config
/// file nor `--out-dir` does.
pub const OUT_DIR_ENV: &str = "ALGOBOARD_OUT";
pub const DEFAULT_OUT_DIR: &str = "algoboard-out";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[derive(clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[derive(clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    #[default]
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spikes: Option<PathBuf>,
    pub z_min: f64,
    pub z_max: f64,
    /// Half-open `[start, end)` spike columns decoding x. Defaults to the
    /// generator's split for synthetic data and to every column for CSV data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_columns: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_columns: Option<[usize; 2]>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            positions: None,
            spikes: None,
            z_min: 0.0,
            z_max: 200.0,
            x_columns: None,
            y_columns: None,
        }
    }
}

impl DataConfig {
    pub fn columns(&self, axis: Axis) -> Option<[usize; 2]> {
        match axis {
            Axis::X => self.x_columns,
            Axis::Y => self.y_columns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub k: usize,
    pub m: usize,
    pub step_std: f64,
    pub weights_range: [f64; 2],
    pub obs_noise_std: f64,
    pub trajectory_kind: TrajectoryKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let base = SimConfig::new(0, 20_000, 46, ActiveSpace::new(0.0, 200.0).unwrap());
        Self {
            seed: base.seed,
            k: base.k,
            m: base.m,
            step_std: base.step_std,
            weights_range: [base.weights_range.0, base.weights_range.1],
            obs_noise_std: base.obs_noise_std,
            trajectory_kind: base.trajectory_kind,
            start: base.start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionSection {
    pub n_max: usize,
    pub mode: CorrectionMode,
    pub min_group_size: usize,
}

impl Default for CorrectionSection {
    fn default() -> Self {
        Self {
            n_max: 5,
            mode: CorrectionMode::Static,
            min_group_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub bins: usize,
    pub smoothing_epsilon: f64,
    pub log_base: LogBase,
    pub r2_variant: R2Variant,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            bins: HistogramSpec::DEFAULT_BINS,
            smoothing_epsilon: HistogramSpec::DEFAULT_EPSILON,
            log_base: LogBase::Natural,
            r2_variant: R2Variant::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraSection {
    pub segment_len: usize,
    pub overlap: f64,
    pub min_prominence: f64,
    pub residual_bins: usize,
}

impl Default for SpectraSection {
    fn default() -> Self {
        Self {
            segment_len: algoboard_core::spectra::DEFAULT_SEGMENT_LEN,
            overlap: algoboard_core::spectra::DEFAULT_OVERLAP,
            min_prominence: algoboard_core::spectra::DEFAULT_MIN_PROMINENCE,
            residual_bins: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[derive(clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoardSampling {
    #[default]
    BallByBall,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaltonSection {
    pub enabled: bool,
    pub rows: usize,
    pub balls: usize,
    pub right_prob: f64,
    pub seed: u64,
    pub sampling: BoardSampling,
    /// Largest row count in the CLT convergence report.
    pub clt_max_rows: usize,
}

impl Default for GaltonSection {
    fn default() -> Self {
        Self {
            enabled: true,
            rows: 12,
            balls: 100_000,
            right_prob: 0.5,
            seed: 0,
            sampling: BoardSampling::BallByBall,
            clt_max_rows: 64,
        }
    }
}

impl GaltonSection {
    pub fn board(&self) -> BoardConfig {
        BoardConfig {
            rows: self.rows,
            balls: self.balls,
            right_prob: self.right_prob,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub axes: Vec<Axis>,
    pub formats: Vec<Format>,
    /// Left out of the report's config echo, so runs into different
    /// directories produce identical reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub synthetic: SyntheticConfig,
    pub em: EMConfig,
    pub correction: CorrectionSection,
    pub metrics: MetricsSection,
    pub spectra: SpectraSection,
    pub galton: GaltonSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            axes: vec![Axis::X, Axis::Y],
            formats: vec![Format::Json, Format::Csv, Format::Svg],
            out_dir: None,
            data: DataConfig::default(),
            synthetic: SyntheticConfig::default(),
            em: EMConfig::default(),
            correction: CorrectionSection::default(),
            metrics: MetricsSection::default(),
            spectra: SpectraSection::default(),
            galton: GaltonSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn space(&self) -> Result<ActiveSpace, ConfigError> {
        ActiveSpace::new(self.data.z_min, self.data.z_max)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let s = &self.synthetic;
        Ok(SimConfig {
            seed: s.seed,
            k: s.k,
            m: s.m,
            space: self.space()?,
            step_std: s.step_std,
            weights_range: (s.weights_range[0], s.weights_range[1]),
            obs_noise_std: s.obs_noise_std,
            trajectory_kind: s.trajectory_kind,
            start: s.start,
        })
    }

    pub fn correction_config(&self) -> CorrectionConfig {
        CorrectionConfig {
            levels: self.correction.n_max,
            mode: self.correction.mode,
            min_group_size: self.correction.min_group_size,
        }
    }

    pub fn histogram_spec(&self) -> Result<HistogramSpec, ConfigError> {
        let space = self.space()?;
        Ok(HistogramSpec {
            bin_count: self.metrics.bins,
            range: (space.z_min(), space.z_max()),
            smoothing_epsilon: self.metrics.smoothing_epsilon,
            log_base: self.metrics.log_base,
        })
    }

    /// Output directory: the configured one, else `$ALGOBOARD_OUT`, else
    /// [`DEFAULT_OUT_DIR`].
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        self.space()?;
        if self.axes.is_empty() {
            return bad("at least one axis is required".into());
        }
        if self.axes.iter().collect::<BTreeSet<_>>().len() != self.axes.len() {
            return bad(format!("duplicate axis in {:?}", self.axes));
        }
        match self.data.source {
            DataSource::Synthetic => {
                self.sim_config()?
                    .validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if self.synthetic.m < 2 {
                    return bad("synthetic data needs m >= 2".into());
                }
            }
            DataSource::Csv => {
                for (name, path) in [
                    ("data.positions", &self.data.positions),
                    ("data.spikes", &self.data.spikes),
                ] {
                    match path {
                        None => return bad(format!("{name} is required for the csv source")),
                        Some(p) if !p.is_file() => {
                            return bad(format!("{name} {} does not exist", p.display()))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        for axis in [Axis::X, Axis::Y] {
            if let Some([start, end]) = self.data.columns(axis) {
                if start >= end {
                    return bad(format!(
                        "{}_columns [{start}, {end}) is empty",
                        axis.label()
                    ));
                }
            }
        }
        self.em
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.correction.n_max > MAX_LEVELS {
            return bad(format!(
                "correction.n_max {} exceeds {MAX_LEVELS}",
                self.correction.n_max
            ));
        }
        self.histogram_spec()?
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let sp = &self.spectra;
        if sp.segment_len < 4 {
            return bad(format!("spectra.segment_len {} < 4", sp.segment_len));
        }
        if !(0.0..1.0).contains(&sp.overlap) {
            return bad(format!("spectra.overlap {} not in [0, 1)", sp.overlap));
        }
        if !(0.0..=1.0).contains(&sp.min_prominence) {
            return bad(format!(
                "spectra.min_prominence {} not in [0, 1]",
                sp.min_prominence
            ));
        }
        if sp.residual_bins == 0 {
            return bad("spectra.residual_bins must be >= 1".into());
        }
        if self.galton.enabled {
            self.galton
                .board()
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if self.galton.clt_max_rows < 2 {
                return bad("galton.clt_max_rows must be >= 2".into());
            }
        }
        Ok(())
    }
}

/// Command-line overrides. Every flag maps onto one [`PipelineConfig`] field
/// and wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML config file.
    #[arg(long, short = 'c', global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $ALGOBOARD_OUT, else ./algoboard-out].
    #[arg(long, short = 'o', global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_axis, global = true)]
    pub axes: Option<Vec<Axis>>,
    #[arg(long, value_delimiter = ',', global = true)]
    pub formats: Option<Vec<Format>>,

    #[arg(long, value_enum, global = true, help_heading = "Data")]
    pub source: Option<DataSource>,
    #[arg(long, global = true, help_heading = "Data")]
    pub positions: Option<PathBuf>,
    #[arg(long, global = true, help_heading = "Data")]
    pub spikes: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true, help_heading = "Data")]
    pub z_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true, help_heading = "Data")]
    pub z_max: Option<f64>,
    /// Spike columns decoding x, as START,END (half-open).
    #[arg(long, value_name = "START,END", value_parser = parse_pair::<usize>, global = true, help_heading = "Data")]
    pub x_columns: Option<[usize; 2]>,
    /// Spike columns decoding y, as START,END (half-open).
    #[arg(long, value_name = "START,END", value_parser = parse_pair::<usize>, global = true, help_heading = "Data")]
    pub y_columns: Option<[usize; 2]>,

    #[arg(long, global = true, help_heading = "Synthetic data")]
    pub seed: Option<u64>,
    #[arg(long, short = 'k', global = true, help_heading = "Synthetic data")]
    pub k: Option<usize>,
    #[arg(long, short = 'm', global = true, help_heading = "Synthetic data")]
    pub m: Option<usize>,
    #[arg(long, global = true, help_heading = "Synthetic data")]
    pub step_std: Option<f64>,
    #[arg(long, global = true, help_heading = "Synthetic data")]
    pub obs_noise_std: Option<f64>,
    /// Emission weight bounds, as LO,HI.
    #[arg(long, value_name = "LO,HI", value_parser = parse_pair::<f64>, global = true,
          allow_hyphen_values = true, help_heading = "Synthetic data")]
    pub weights_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_trajectory_kind, global = true, help_heading = "Synthetic data")]
    pub trajectory_kind: Option<TrajectoryKind>,

    #[arg(long, global = true, help_heading = "Decoder")]
    pub max_iters: Option<usize>,
    #[arg(long, global = true, help_heading = "Decoder")]
    pub loglik_tol: Option<f64>,
    #[arg(long, value_parser = parse_init_scheme, global = true, help_heading = "Decoder")]
    pub init_scheme: Option<InitScheme>,
    #[arg(long, value_parser = parse_weight_update, global = true, help_heading = "Decoder")]
    pub weight_update: Option<WeightUpdateMode>,
    #[arg(long, global = true, help_heading = "Decoder")]
    pub em_seed: Option<u64>,

    #[arg(long, global = true, help_heading = "Correction")]
    pub n_max: Option<usize>,
    #[arg(long, value_parser = parse_correction_mode, global = true, help_heading = "Correction")]
    pub mode: Option<CorrectionMode>,
    #[arg(long, global = true, help_heading = "Correction")]
    pub min_group_size: Option<usize>,

    #[arg(long, global = true, help_heading = "Metrics")]
    pub bins: Option<usize>,
    #[arg(long, global = true, help_heading = "Metrics")]
    pub smoothing_epsilon: Option<f64>,
    #[arg(long, value_parser = parse_log_base, global = true, help_heading = "Metrics")]
    pub log_base: Option<LogBase>,
    #[arg(long, value_parser = parse_r2_variant, global = true, help_heading = "Metrics")]
    pub r2_variant: Option<R2Variant>,

    #[arg(long, global = true, help_heading = "Spectra")]
    pub segment_len: Option<usize>,
    #[arg(long, global = true, help_heading = "Spectra")]
    pub overlap: Option<f64>,
    #[arg(long, global = true, help_heading = "Spectra")]
    pub min_prominence: Option<f64>,
    #[arg(long, global = true, help_heading = "Spectra")]
    pub residual_bins: Option<usize>,

    /// Enable or disable the Galton board stage (true/false).
    #[arg(long, global = true, help_heading = "Galton board")]
    pub galton: Option<bool>,
    #[arg(long, global = true, help_heading = "Galton board")]
    pub rows: Option<usize>,
    #[arg(long, global = true, help_heading = "Galton board")]
    pub balls: Option<usize>,
    #[arg(long, global = true, help_heading = "Galton board")]
    pub right_prob: Option<f64>,
    #[arg(long, global = true, help_heading = "Galton board")]
    pub galton_seed: Option<u64>,
    #[arg(long, value_enum, global = true, help_heading = "Galton board")]
    pub sampling: Option<BoardSampling>,
    #[arg(long, global = true, help_heading = "Galton board")]
    pub clt_max_rows: Option<usize>,
}

fn parse_serde_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s))
        .map_err(|e| e.to_string())
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    parse_serde_enum(s)
}
fn parse_trajectory_kind(s: &str) -> Result<TrajectoryKind, String> {
    parse_serde_enum(s)
}
fn parse_init_scheme(s: &str) -> Result<InitScheme, String> {
    parse_serde_enum(s)
}
fn parse_weight_update(s: &str) -> Result<WeightUpdateMode, String> {
    parse_serde_enum(s)
}
fn parse_correction_mode(s: &str) -> Result<CorrectionMode, String> {
    parse_serde_enum(s)
}
fn parse_log_base(s: &str) -> Result<LogBase, String> {
    parse_serde_enum(s)
}
fn parse_r2_variant(s: &str) -> Result<R2Variant, String> {
    parse_serde_enum(s)
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<[T; 2], String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<T>().map_err(|_| format!("cannot parse `{v}`"));
    Ok([num(a)?, num(b)?])
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
}

impl ConfigArgs {
    /// Config file (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> Result<PipelineConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if self.out_dir.is_some() {
            cfg.out_dir = self.out_dir.clone();
        }
        set!(self.axes => cfg.axes);
        set!(self.formats => cfg.formats);

        set!(self.source => cfg.data.source);
        if self.positions.is_some() {
            cfg.data.positions = self.positions.clone();
        }
        if self.spikes.is_some() {
            cfg.data.spikes = self.spikes.clone();
        }
        set!(self.z_min => cfg.data.z_min);
        set!(self.z_max => cfg.data.z_max);
        if let Some(v) = &self.x_columns {
            cfg.data.x_columns = Some(*v);
        }
        if let Some(v) = &self.y_columns {
            cfg.data.y_columns = Some(*v);
        }

        let s = &mut cfg.synthetic;
        set!(self.seed => s.seed);
        set!(self.k => s.k);
        set!(self.m => s.m);
        set!(self.step_std => s.step_std);
        set!(self.obs_noise_std => s.obs_noise_std);
        if let Some(v) = &self.weights_range {
            s.weights_range = *v;
        }
        set!(self.trajectory_kind => s.trajectory_kind);

        set!(self.max_iters => cfg.em.max_iters);
        set!(self.loglik_tol => cfg.em.loglik_tol);
        set!(self.init_scheme => cfg.em.init_scheme);
        set!(self.weight_update => cfg.em.weight_update);
        set!(self.em_seed => cfg.em.seed);

        set!(self.n_max => cfg.correction.n_max);
        set!(self.mode => cfg.correction.mode);
        set!(self.min_group_size => cfg.correction.min_group_size);

        set!(self.bins => cfg.metrics.bins);
        set!(self.smoothing_epsilon => cfg.metrics.smoothing_epsilon);
        set!(self.log_base => cfg.metrics.log_base);
        set!(self.r2_variant => cfg.metrics.r2_variant);

        set!(self.segment_len => cfg.spectra.segment_len);
        set!(self.overlap => cfg.spectra.overlap);
        set!(self.min_prominence => cfg.spectra.min_prominence);
        set!(self.residual_bins => cfg.spectra.residual_bins);

        set!(self.galton => cfg.galton.enabled);
        set!(self.rows => cfg.galton.rows);
        set!(self.balls => cfg.galton.balls);
        set!(self.right_prob => cfg.galton.right_prob);
        set!(self.galton_seed => cfg.galton.seed);
        set!(self.sampling => cfg.galton.sampling);
        set!(self.clt_max_rows => cfg.galton.clt_max_rows);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_toml_string();
        assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml_str(
            "axes = [\"y\"]\n[correction]\nn_max = 3\n[em]\nweight_update = \"unscaled-denominator\"\n",
        )
        .unwrap();
        assert_eq!(cfg.axes, vec![Axis::Y]);
        assert_eq!(cfg.correction.n_max, 3);
        assert_eq!(cfg.correction.mode, CorrectionMode::Static);
        assert_eq!(cfg.em.weight_update, WeightUpdateMode::UnscaledDenominator);
        assert_eq!(cfg.em.max_iters, EMConfig::default().max_iters);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml_str("[correction]\nlevels = 3\n").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let mut cfg = PipelineConfig::from_toml_str("[correction]\nn_max = 3\n").unwrap();
        let args = ConfigArgs {
            n_max: Some(7),
            mode: Some(CorrectionMode::Refit),
            x_columns: Some([0, 4]),
            ..ConfigArgs::default()
        };
        args.apply(&mut cfg);
        assert_eq!(cfg.correction.n_max, 7);
        assert_eq!(cfg.correction.mode, CorrectionMode::Refit);
        assert_eq!(cfg.data.x_columns, Some([0, 4]));
    }

    #[test]
    fn pair_flags_parse_comma_form() {
        use clap::Parser;
        #[derive(Parser)]
        struct Cli {
            #[command(flatten)]
            args: ConfigArgs,
        }
        let cli = Cli::try_parse_from(["t", "--x-columns", "2,9", "--weights-range", "-3,0.5"]).unwrap();
        assert_eq!(cli.args.x_columns, Some([2, 9]));
        assert_eq!(cli.args.weights_range, Some([-3.0, 0.5]));
        assert!(Cli::try_parse_from(["t", "--y-columns", "4"]).is_err());
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut cfg = PipelineConfig::default();
        cfg.correction.n_max = MAX_LEVELS + 1;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.data.source = DataSource::Csv;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("data.positions"), "{msg}");

        let mut cfg = PipelineConfig::default();
        cfg.axes = vec![Axis::X, Axis::X];
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.data.z_max = cfg.data.z_min;
        assert!(cfg.validate().is_err());

        assert!(PipelineConfig::default().validate().is_ok());
    }

    #[test]
    fn enum_flags_use_config_spelling() {
        assert_eq!(parse_log_base("2"), Ok(LogBase::Two));
        assert_eq!(parse_correction_mode("refit"), Ok(CorrectionMode::Refit));
        assert_eq!(
            parse_trajectory_kind("sinusoid-mixture"),
            Ok(TrajectoryKind::SinusoidMixture)
        );
        assert!(parse_r2_variant("bogus").is_err());
    }
}
