//! Finite volume solvers for two-species reaction-diffusion systems with a
//! single reversible reaction `alpha A <-> beta B` at rate `k`, and for the
//! nonlinear diffusion problem obtained in the fast-reaction limit `k -> inf`.
//!
//! The discretisation is implicit Euler in time and two-point flux
//! approximation in space on admissible meshes. The discrete solutions keep
//! the structure of the continuous problem: conservation of
//! `u/alpha + v/beta`, nonnegativity, comparison principle, L1 contraction and
//! decay of an entropy functional, with bounds that do not depend on `k`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kinetics;
pub mod limit;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod roots;
pub mod scheme;

pub use diagnostics::{DiagnosticsReport, LimitComparison, Lyapunov};
pub use error::{Error, NewtonRecord, Result};
pub use kinetics::{Dimerisation, Kinetics, PowerLaw, RateFunction};
pub use limit::{integrate_w, step_w, WState, WTrajectory};
pub use linalg::LinearSolver;
pub use mesh::{Cell, Face, Mesh, TimeGrid};
pub use scheme::{integrate, step, OutputLevels, SolverConfig, State, StepStats, Trajectory};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
