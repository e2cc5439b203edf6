//! JSON report, schema version 1.
//!
//! Maps are `BTreeMap` so key order is stable, and nothing time-dependent is
//! recorded: the same config produces the same bytes. Non-finite numbers are
//! never written; a metric that cannot be computed is `null` with its reason
//! under the sibling `undefined` object.

use std::collections::BTreeMap;

use algoboard_core::correct::CorrectionEvent;
use algoboard_core::decoder::AffineMap;
use algoboard_core::galton::{BitDecisionLevel, ClTPoint};
use algoboard_core::metrics::MetricRow;
use algoboard_core::spectra::{Moments, PsdParams};
use algoboard_core::StateSpaceParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{BoardSampling, DataSource, PipelineConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

pub type Reasons = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config_echo: PipelineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSummary>,
    /// Keyed by axis label.
    pub decoding: BTreeMap<String, DecodingSummary>,
    pub correction: BTreeMap<String, CorrectionSummary>,
    pub metric_rows: BTreeMap<String, Vec<MetricRow>>,
    pub spectra_summaries: BTreeMap<String, SpectraSummary>,
    pub galton: GaltonEntry,
    pub log: Vec<String>,
}

impl Report {
    pub fn new(cfg: &PipelineConfig) -> Self {
        let mut echo = cfg.clone();
        echo.out_dir = None;
        Self {
            schema_version: SCHEMA_VERSION,
            config_echo: echo,
            dataset: None,
            decoding: BTreeMap::new(),
            correction: BTreeMap::new(),
            metric_rows: BTreeMap::new(),
            spectra_summaries: BTreeMap::new(),
            galton: GaltonEntry::Skipped {
                skipped: "not requested".into(),
            },
            log: Vec::new(),
        }
    }

    /// Pretty JSON with a trailing newline. Fails if any `null` lacks a
    /// recorded reason, which is also how a stray NaN would surface.
    pub fn to_json(&self) -> Result<String, String> {
        let value = serde_json::to_value(self).map_err(|e| e.to_string())?;
        check_nulls(&value, "$")?;
        let mut text = serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?;
        text.push('\n');
        Ok(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: DataSource,
    pub k: usize,
    pub m: usize,
    /// Half-open spike-column range decoding each axis.
    pub columns: BTreeMap<String, [usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingSummary {
    pub iters_used: usize,
    pub final_loglik: f64,
    /// Fitted parameters in latent coordinates.
    pub params: StateSpaceParams,
    pub latent_to_space: AffineMap,
    pub weights_in_space: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undefined: Reasons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSummary {
    /// Samples reflected at level `n`, for `n` in `0..N`.
    pub reflections: Vec<usize>,
    pub events: Vec<CorrectionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpectra {
    pub pdf_modes: usize,
    pub psd_peak_frequency: Option<f64>,
    pub psd_mean_power: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undefined: Reasons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub level: usize,
    pub pdf_modes: usize,
    pub moments: Option<Moments>,
    pub gaussian_screen: bool,
    pub psd_mean_power: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undefined: Reasons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraSummary {
    pub psd_method: Option<PsdParams>,
    pub truth: SeriesSpectra,
    /// Predictions at levels `0..=N`.
    pub levels: Vec<SeriesSpectra>,
    pub residuals: Vec<ResidualEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub undefined: Reasons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaltonSummary {
    pub rows: usize,
    pub balls: usize,
    pub right_prob: f64,
    pub sampling: BoardSampling,
    pub bin_counts: Vec<u64>,
    pub binomial_pmf: Vec<f64>,
    pub tv_to_binomial: f64,
    pub clt: Vec<ClTPoint>,
    /// Per-axis bit decisions of the correction, read as a board.
    pub algorithm_board: BTreeMap<String, Vec<BitDecisionLevel>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GaltonEntry {
    Ran(Box<GaltonSummary>),
    Skipped { skipped: String },
}

/// Every `null` must have an entry of the same name in a sibling
/// `undefined` object.
pub fn check_nulls(value: &Value, path: &str) -> Result<(), String> {
    match value {
        Value::Object(map) => {
            let reasons = map.get("undefined").and_then(Value::as_object);
            for (key, v) in map {
                let here = format!("{path}.{key}");
                if v.is_null() {
                    if !reasons.is_some_and(|r| r.contains_key(key)) {
                        return Err(format!("{here} is null without a recorded reason"));
                    }
                } else {
                    check_nulls(v, &here)?;
                }
            }
            Ok(())
        }
        Value::Array(items) => items
            .iter()
            .enumerate()
            .try_for_each(|(i, v)| check_nulls(v, &format!("{path}[{i}]"))),
        Value::Null => Err(format!("{path} is null without a recorded reason")),
        _ => Ok(()),
    }
}
