//! Pipeline around `algoboard-core`: configuration, CSV ingest, the staged
//! run, the JSON report and SVG figures.

pub mod config;
pub mod figures;
pub mod ingest;
pub mod pipeline;
pub mod plot;
pub mod report;
