//! Implicit finite volume solver for the limit problem `w_t = Lap phi(w)`
//! with homogeneous Neumann conditions and `w_0 = u_0/alpha + v_0/beta`.
//!
//! Each step solves `m_K (w_K - w_K^n) - dt sum_L T_KL (phi(w_L) - phi(w_K)) = 0`
//! by damped Newton; `phi'` comes from the inverse-function rule in
//! [`Kinetics::phi_derivative`].

use crate::error::{Error, Result};
use crate::kinetics::Kinetics;
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, TimeGrid};
use crate::scheme::{newton, project_initial, OutputLevels, SolverConfig, StepStats};

/// Cell values of the conserved quantity at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct WState {
    pub w: Vec<f64>,
    pub level: usize,
    pub time: f64,
}

impl WState {
    pub fn new(w: Vec<f64>) -> Self {
        Self { w, level: 0, time: 0.0 }
    }

    pub fn mass(&self, mesh: &Mesh) -> f64 {
        mesh.measures().zip(&self.w).map(|(m, w)| m * w).sum()
    }

    pub fn min(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WTrajectory {
    pub states: Vec<WState>,
    pub stats: Vec<StepStats>,
}

impl WTrajectory {
    pub fn last(&self) -> &WState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// `w_K = u_K/alpha + v_K/beta` of the projected initial data.
pub fn project_initial_w<F, G>(mesh: &Mesh, kin: &Kinetics, u0: F, v0: G, order: usize) -> Result<WState>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let s = project_initial(mesh, u0, v0, order)?;
    Ok(WState::new(s.w(kin)))
}

// phi and phi' extended oddly/evenly to w < 0 so that Newton iterates may
// overshoot below zero.
fn phi_ext(kin: &Kinetics, w: f64) -> f64 {
    let p = kin.phi(w.abs()).unwrap_or(f64::NAN);
    if w < 0.0 {
        -p
    } else {
        p
    }
}

fn dphi_ext(kin: &Kinetics, w: f64) -> f64 {
    kin.phi_derivative(w.abs()).unwrap_or(f64::NAN)
}

fn residual_w(mesh: &Mesh, kin: &Kinetics, dt: f64, prev: &[f64], w: &[f64]) -> Vec<f64> {
    let phi: Vec<f64> = w.iter().map(|&x| phi_ext(kin, x)).collect();
    mesh.cells()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let flux: f64 = mesh
                .neighbors(k)
                .iter()
                .map(|&(l, fi)| mesh.faces()[fi].transmissibility * (phi[l] - phi[k]))
                .sum();
            c.measure * (w[k] - prev[k]) - dt * flux
        })
        .collect()
}

fn jacobian_w(mesh: &Mesh, kin: &Kinetics, dt: f64, w: &[f64]) -> CsrMatrix {
    let dphi: Vec<f64> = w.iter().map(|&x| dphi_ext(kin, x)).collect();
    let mut t = Vec::new();
    for (k, c) in mesh.cells().iter().enumerate() {
        let mut sum_t = 0.0;
        for &(l, fi) in mesh.neighbors(k) {
            let tr = mesh.faces()[fi].transmissibility;
            sum_t += tr;
            t.push((k, l, -dt * tr * dphi[l]));
        }
        t.push((k, k, c.measure + dt * sum_t * dphi[k]));
    }
    CsrMatrix::from_triplets(w.len(), t)
}

/// Residual of the limit scheme at `guess`.
pub fn residual(mesh: &Mesh, kin: &Kinetics, dt: f64, prev: &WState, guess: &WState) -> Result<Vec<f64>> {
    mesh.ensure_len("prev.w", prev.w.len())?;
    mesh.ensure_len("guess.w", guess.w.len())?;
    Ok(residual_w(mesh, kin, dt, &prev.w, &guess.w))
}

pub fn step_w(mesh: &Mesh, kin: &Kinetics, dt: f64, prev: &WState, cfg: &SolverConfig) -> Result<(WState, StepStats)> {
    mesh.ensure_len("prev.w", prev.w.len())?;
    cfg.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive (got {dt})")));
    }
    let out = newton(
        mesh,
        1,
        prev.w.clone(),
        cfg,
        |x| residual_w(mesh, kin, dt, &prev.w, x),
        |x| jacobian_w(mesh, kin, dt, x),
    )?;
    if !out.converged {
        return Err(Error::NewtonFailure { trace: out.trace });
    }
    let (lo, hi) = (prev.min(), prev.max());
    let slack = 10.0 * cfg.newton_tol * hi.abs().max(1.0);
    if let Some((k, w)) = out
        .x
        .iter()
        .enumerate()
        .find(|(_, &w)| !w.is_finite() || w < lo - slack || w > hi + slack)
    {
        return Err(Error::Consistency(format!(
            "cell {k}: w = {w} leaves the range [{lo}, {hi}] of the previous level"
        )));
    }
    let next = WState {
        w: out.x,
        level: prev.level + 1,
        time: prev.time + dt,
    };
    let stats = StepStats {
        level: next.level,
        time: next.time,
        dt,
        newton_iterations: out.iterations,
        residual: out.residual,
        used_fallback: false,
    };
    Ok((next, stats))
}

pub fn integrate_w(
    mesh: &Mesh,
    kin: &Kinetics,
    grid: &TimeGrid,
    initial: &WState,
    cfg: &SolverConfig,
    output: &OutputLevels,
) -> Result<WTrajectory> {
    mesh.ensure_len("initial.w", initial.w.len())?;
    let last = grid.n_steps();
    let mut current = WState {
        w: initial.w.clone(),
        level: 0,
        time: 0.0,
    };
    let mut states = vec![current.clone()];
    let mut stats = Vec::with_capacity(last);
    for n in 0..last {
        let (mut next, st) = step_w(mesh, kin, grid.step(n), &current, cfg).map_err(|e| e.at_level(n + 1))?;
        next.time = grid.levels()[n + 1];
        stats.push(StepStats { time: next.time, ..st });
        if output.keeps(n + 1, last) {
            states.push(next.clone());
        }
        current = next;
    }
    Ok(WTrajectory { states, stats })
}
