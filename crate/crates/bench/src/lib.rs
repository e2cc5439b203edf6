//! Shared inputs for the criterion benchmarks in `benches/`.

use algoboard_core::decoder::{em_fit, EMConfig};
use algoboard_core::synth::{simulate_dataset, SimConfig, SyntheticDataset};
use algoboard_core::{ActiveSpace, Axis, ObservationMatrix, PredictionSeries, StateSpaceParams};

pub fn space() -> ActiveSpace {
    ActiveSpace::new(0.0, 200.0).expect("valid bounds")
}

pub fn dataset(k: usize, m: usize) -> SyntheticDataset {
    simulate_dataset(&SimConfig::new(0, k, m, space())).expect("valid config")
}

/// X-axis observations of `ds` and the true emission parameters.
pub fn x_problem(ds: &SyntheticDataset) -> (ObservationMatrix, StateSpaceParams) {
    let obs = ds
        .obs
        .select_columns(ds.columns(Axis::X))
        .expect("column range fits");
    (obs, ds.params(Axis::X).clone())
}

/// A short EM fit, used as level-0 input for the correction benchmarks.
pub fn level0(ds: &SyntheticDataset) -> PredictionSeries {
    let (obs, _) = x_problem(ds);
    let cfg = EMConfig { max_iters: 20, ..EMConfig::default() };
    em_fit(&obs, &space(), &cfg).expect("fit succeeds").prediction
}
