//! Unsupervised state-space decoding of movement from neural observations,
//! recursive symmetric correction with one ground-truth bit per level, and
//! the metric, spectral and Galton-board analyses built on top of them.

pub mod correct;
pub mod decoder;
pub mod error;
pub mod galton;
pub mod metrics;
pub mod model;
pub mod spectra;
pub mod synth;

pub use correct::{
    correct_once, correct_recursive, encode_bit, subspace_for, CorrectionConfig, CorrectionMode,
    CorrectionTrace, Redecode, SubspaceNode,
};
pub use decoder::{em_fit, kalman_filter, kalman_smoother, EMConfig, EMResult, WeightUpdateMode};
pub use error::{Error, Result};
pub use model::{
    validate_dataset, ActiveSpace, Axis, BitSeries, ObservationMatrix, PredictionSeries,
    StateSpaceParams, TrajectorySeries, ValidationReport,
};
