//! Built-in experiment configurations.

use crate::config::{ExperimentConfig, InitialSpec, KValues, KineticsSpec, MeshSpec, OutputSpec, TimeSpec};
use crate::error::{CliError, CliResult};
use fastreact::SolverConfig;

pub const NAMES: [&str; 3] = ["dimerisation", "dimerisation-sweep", "trivial"];

/// Final time of the single dimerisation run, seconds.
pub const DIMERISATION_T: f64 = 1e5;
/// Final time of the k-sweep, seconds.
pub const SWEEP_T: f64 = 1e11;
pub const SWEEP_K: [f64; 8] = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0];

fn ramp(final_time: f64, initial_step: f64) -> TimeSpec {
    TimeSpec::Ramped {
        final_time,
        initial_step,
        growth: 1.1,
    }
}

fn dimerisation(name: &str, final_time: f64, k: KValues) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        mesh: MeshSpec { length: 0.1, cells: 50 },
        time: ramp(final_time, 1e-8),
        limit_time: Some(ramp(final_time, 1e-6)),
        kinetics: KineticsSpec::dimerisation_reference(),
        k,
        initial: InitialSpec::Dimerisation,
        quadrature_order: 3,
        solver: SolverConfig::default(),
        output: OutputSpec::default(),
    }
}

pub fn preset(name: &str) -> CliResult<ExperimentConfig> {
    Ok(match name {
        // 50 cells on [0, 0.1], k = 1, T = 1e5 s
        "dimerisation" => dimerisation(name, DIMERISATION_T, KValues::Single(1.0)),
        // k from 1e-7 to 1 at T = 1e11 s
        "dimerisation-sweep" => dimerisation(name, SWEEP_T, KValues::Sweep(SWEEP_K.to_vec())),
        // one cell, no reaction, constant data
        "trivial" => ExperimentConfig {
            name: name.into(),
            mesh: MeshSpec { length: 1.0, cells: 1 },
            time: TimeSpec::Uniform {
                final_time: 1.0,
                steps: 4,
            },
            limit_time: Some(TimeSpec::Uniform {
                final_time: 1.0,
                steps: 4,
            }),
            kinetics: KineticsSpec::dimerisation_reference(),
            k: KValues::Single(0.0),
            initial: InitialSpec::Constant { u: 0.2, v: 0.1 },
            quadrature_order: 1,
            solver: SolverConfig::default(),
            output: OutputSpec::default(),
        },
        _ => {
            return Err(CliError::Config(format!(
                "unknown preset {name:?} (available: {})",
                NAMES.join(", ")
            )))
        }
    })
}
