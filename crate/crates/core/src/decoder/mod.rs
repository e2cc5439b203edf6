//! Unsupervised position decoding: Kalman filtering/smoothing inside EM.

pub mod em;
pub mod kalman;

pub use em::{
    compare_weight_updates, e_step, em_fit, em_fit_from, initial_params, log_likelihood, m_step,
    update_weights, AffineMap, EMConfig, EMResult, EmRedecoder, InitScheme, WeightDivergence,
    WeightUpdate, WeightUpdateMode,
};
pub use kalman::{kalman_filter, kalman_smoother, smooth, FilterOutput, SmootherOutput};
