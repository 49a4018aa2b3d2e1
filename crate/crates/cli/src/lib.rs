//! Experiment driver for the `fastreact` solvers: JSON configuration,
//! built-in presets, runs and parallel k-sweeps with CSV artifacts, and
//! plot-data extraction.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod plot;
pub mod presets;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
