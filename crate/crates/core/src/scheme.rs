//! Fully implicit two-point-flux finite volume scheme for the coupled system
//!
//! ```text
//! u_t = a Lap u - alpha k (r_A(u) - r_B(v))
//! v_t = b Lap v + beta  k (r_A(u) - r_B(v))
//! ```
//!
//! with homogeneous Neumann boundary conditions. Each time step solves, for
//! every cell `K`,
//!
//! ```text
//! m_K (u_K - u_K^n) - dt a sum_L T_KL (u_L - u_K) + dt m_K k alpha (r_A(u_K) - r_B(v_K)) = 0
//! m_K (v_K - v_K^n) - dt b sum_L T_KL (v_L - v_K) - dt m_K k beta  (r_A(u_K) - r_B(v_K)) = 0
//! ```
//!
//! by damped Newton on the coupled `2 n_cells` system (unknowns interleaved
//! `u_0, v_0, u_1, v_1, ...`), with a nonlinear block Gauss-Seidel fallback.
//! No clipping is applied: nonnegativity and the sup-norm bounds must come out
//! of the solve, and are verified after every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, NewtonRecord, Result};
use crate::kinetics::Kinetics;
use crate::linalg::{solve, CsrMatrix, LinearSolver};
use crate::mesh::{Mesh, TimeGrid};
use crate::quadrature::interval_mean;
use crate::roots::solve_increasing;

/// Cell concentrations `(u_K, v_K)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub level: usize,
    pub time: f64,
}

impl State {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Mismatch(format!("u has {} cells, v has {}", u.len(), v.len())));
        }
        Ok(Self {
            u,
            v,
            level: 0,
            time: 0.0,
        })
    }

    /// Spatially constant state.
    pub fn constant(n_cells: usize, u: f64, v: f64) -> Self {
        Self {
            u: vec![u; n_cells],
            v: vec![v; n_cells],
            level: 0,
            time: 0.0,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.u.len()
    }

    /// Per-cell conserved quantity `u/alpha + v/beta`.
    pub fn w(&self, kin: &Kinetics) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(&u, &v)| kin.conserved(u, v)).collect()
    }

    /// `sum_K m_K (u_K/alpha + v_K/beta)`.
    pub fn mass_w(&self, mesh: &Mesh, kin: &Kinetics) -> f64 {
        mesh.measures()
            .zip(self.u.iter().zip(&self.v))
            .map(|(m, (&u, &v))| m * kin.conserved(u, v))
            .sum()
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn max_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn min_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn min_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn interleaved(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).flat_map(|(&u, &v)| [u, v]).collect()
    }

    fn from_interleaved(x: &[f64], level: usize, time: f64) -> Self {
        Self {
            u: x.iter().step_by(2).copied().collect(),
            v: x.iter().skip(1).step_by(2).copied().collect(),
            level,
            time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Tolerance on the scaled max-norm of the residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linesearch: bool,
    pub linear_solver: LinearSolver,
    /// Sweep limit of the Gauss-Seidel fallback.
    pub fallback_max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            newton_max_iter: 60,
            linesearch: true,
            linear_solver: LinearSolver::SparseDirect,
            fallback_max_sweeps: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "newton_tol must be positive (got {})",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidArgument("newton_max_iter must be >= 1".into()));
        }
        if let LinearSolver::Bicgstab { tol, max_iter } = self.linear_solver {
            if !(tol > 0.0) || max_iter == 0 {
                return Err(Error::InvalidArgument(
                    "iterative linear solver needs positive tolerance and iteration limit".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Solver statistics of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Index of the level that was computed.
    pub level: usize,
    pub time: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    /// Final scaled residual max-norm.
    pub residual: f64,
    pub used_fallback: bool,
}

/// Which levels an integration keeps. The initial and final levels are always
/// kept.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputLevels {
    #[default]
    All,
    Every(usize),
    Listed(Vec<usize>),
}

impl OutputLevels {
    pub fn keeps(&self, level: usize, last: usize) -> bool {
        level == 0
            || level == last
            || match self {
                OutputLevels::All => true,
                OutputLevels::Every(n) => *n > 0 && level.is_multiple_of(*n),
                OutputLevels::Listed(list) => list.contains(&level),
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    /// One entry per step taken, whether or not the level was kept.
    pub stats: Vec<StepStats>,
}

impl Trajectory {
    pub fn initial(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    /// True when every level of `grid` is present, in order.
    pub fn is_complete(&self, grid: &TimeGrid) -> bool {
        self.states.len() == grid.n_levels() && self.states.iter().enumerate().all(|(i, s)| s.level == i)
    }
}

/// Cell averages of `u0`, `v0` by an `order`-point Gauss-Legendre rule
/// (order 1 is the midpoint rule). In one dimension cell `K` is the interval
/// of length `m_K` centred at `x_K`; in higher dimensions the cell point value
/// is used.
pub fn project_initial<F, G>(mesh: &Mesh, u0: F, v0: G, order: usize) -> Result<State>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let mut u = Vec::with_capacity(mesh.n_cells());
    let mut v = Vec::with_capacity(mesh.n_cells());
    for cell in mesh.cells() {
        let (mu, mv) = if mesh.dim() == 1 {
            let lo = cell.center[0] - 0.5 * cell.measure;
            let hi = cell.center[0] + 0.5 * cell.measure;
            (
                checked_mean(|x| u0(&[x]), lo, hi, order, "u0")?,
                checked_mean(|x| v0(&[x]), lo, hi, order, "v0")?,
            )
        } else {
            (u0(&cell.center), v0(&cell.center))
        };
        for (name, val) in [("u0", mu), ("v0", mv)] {
            if !(val >= 0.0) || !val.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be nonnegative and bounded (cell {}: {val})",
                    cell.id
                )));
            }
        }
        u.push(mu);
        v.push(mv);
    }
    State::new(u, v)
}

fn checked_mean<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, order: usize, name: &str) -> Result<f64> {
    let mut bad = None;
    let mean = interval_mean(
        |x| {
            let y = f(x);
            if !(y >= 0.0) {
                bad.get_or_insert((x, y));
            }
            y
        },
        lo,
        hi,
        order,
    )?;
    if let Some((x, y)) = bad {
        return Err(Error::InvalidArgument(format!("{name} is negative at x = {x} ({y})")));
    }
    Ok(mean)
}

fn check_shapes(mesh: &Mesh, state: &State, what: &str) -> Result<()> {
    mesh.ensure_len(&format!("{what}.u"), state.u.len())?;
    mesh.ensure_len(&format!("{what}.v"), state.v.len())
}

/// Residual of the scheme at `guess`, given the previous level `prev`.
/// Returns the `u` and `v` components per cell.
pub fn residual(mesh: &Mesh, kin: &Kinetics, dt: f64, prev: &State, guess: &State) -> Result<(Vec<f64>, Vec<f64>)> {
    check_shapes(mesh, prev, "prev")?;
    check_shapes(mesh, guess, "guess")?;
    let f = residual_interleaved(mesh, kin, dt, &prev.interleaved(), &guess.interleaved());
    Ok((
        f.iter().step_by(2).copied().collect(),
        f.iter().skip(1).step_by(2).copied().collect(),
    ))
}

fn residual_interleaved(mesh: &Mesh, kin: &Kinetics, dt: f64, prev: &[f64], x: &[f64]) -> Vec<f64> {
    let (a, b) = (kin.a(), kin.b());
    let (ah, bh) = (kin.alpha_hat(), kin.beta_hat());
    let mut f = vec![0.0; x.len()];
    for (k, cell) in mesh.cells().iter().enumerate() {
        let m = cell.measure;
        let (u, v) = (x[2 * k], x[2 * k + 1]);
        let mut flux_u = 0.0;
        let mut flux_v = 0.0;
        for &(l, fi) in mesh.neighbors(k) {
            let t = mesh.faces()[fi].transmissibility;
            flux_u += t * (x[2 * l] - u);
            flux_v += t * (x[2 * l + 1] - v);
        }
        let reaction = kin.r_a(u) - kin.r_b(v);
        f[2 * k] = m * (u - prev[2 * k]) - dt * a * flux_u + dt * m * ah * reaction;
        f[2 * k + 1] = m * (v - prev[2 * k + 1]) - dt * b * flux_v - dt * m * bh * reaction;
    }
    f
}

fn jacobian(mesh: &Mesh, kin: &Kinetics, dt: f64, x: &[f64]) -> CsrMatrix {
    let (a, b) = (kin.a(), kin.b());
    let (ah, bh) = (kin.alpha_hat(), kin.beta_hat());
    let n = x.len();
    let mut t = Vec::with_capacity(n * 4);
    for (k, cell) in mesh.cells().iter().enumerate() {
        let m = cell.measure;
        let (iu, iv) = (2 * k, 2 * k + 1);
        let ra = kin.r_a_prime(x[iu]);
        let rb = kin.r_b_prime(x[iv]);
        let mut sum_t = 0.0;
        for &(l, fi) in mesh.neighbors(k) {
            let tr = mesh.faces()[fi].transmissibility;
            sum_t += tr;
            t.push((iu, 2 * l, -dt * a * tr));
            t.push((iv, 2 * l + 1, -dt * b * tr));
        }
        t.push((iu, iu, m + dt * a * sum_t + dt * m * ah * ra));
        t.push((iu, iv, -dt * m * ah * rb));
        t.push((iv, iv, m + dt * b * sum_t + dt * m * bh * rb));
        t.push((iv, iu, -dt * m * bh * ra));
    }
    CsrMatrix::from_triplets(n, t)
}

/// `max_i |F_i| / (m_K max(1, |x_i|))`.
fn scaled_max_norm(mesh: &Mesh, f: &[f64], x: &[f64], comps: usize) -> f64 {
    f.iter()
        .zip(x)
        .enumerate()
        .map(|(i, (fi, xi))| fi.abs() / (mesh.measure(i / comps) * xi.abs().max(1.0)))
        .fold(0.0, f64::max)
}

fn scaled_l2(mesh: &Mesh, f: &[f64], x: &[f64], comps: usize) -> f64 {
    f.iter()
        .zip(x)
        .enumerate()
        .map(|(i, (fi, xi))| (fi / (mesh.measure(i / comps) * xi.abs().max(1.0))).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub trace: Vec<NewtonRecord>,
}

/// Damped Newton for `F(x) = 0` with the scaled stopping rule. Also stops when
/// a full Newton step changes no unknown by more than `1e-14 max(1, |x_i|)`,
/// which is where the residual hits its round-off floor.
pub(crate) fn newton<R, J>(
    mesh: &Mesh,
    comps: usize,
    mut x: Vec<f64>,
    cfg: &SolverConfig,
    residual: R,
    jacobian: J,
) -> Result<NewtonOutcome>
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> CsrMatrix,
{
    let mut trace = Vec::new();
    let mut f = residual(&x);
    for it in 0..cfg.newton_max_iter {
        let rnorm = scaled_max_norm(mesh, &f, &x, comps);
        if !rnorm.is_finite() {
            break;
        }
        if rnorm <= cfg.newton_tol {
            trace.push(NewtonRecord {
                iteration: it,
                residual: rnorm,
                damping: 0.0,
            });
            return Ok(NewtonOutcome {
                x,
                iterations: it,
                residual: rnorm,
                converged: true,
                trace,
            });
        }
        let jac = jacobian(&x);
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = match solve(&jac, &neg_f, cfg.linear_solver) {
            Ok(d) => d,
            Err(_) => break,
        };
        let merit = scaled_l2(mesh, &f, &x, comps);
        let mut lambda = 1.0;
        let (x_new, f_new) = loop {
            let x_try: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            let f_try = residual(&x_try);
            let m_try = scaled_l2(mesh, &f_try, &x_try, comps);
            if !cfg.linesearch || (m_try.is_finite() && m_try <= (1.0 - 1e-4 * lambda) * merit) {
                break (x_try, f_try);
            }
            lambda *= 0.5;
            if lambda < 1.0 / 1024.0 {
                // accept a tiny damped step only if it does not blow up
                if m_try.is_finite() && m_try <= merit {
                    break (x_try, f_try);
                }
                trace.push(NewtonRecord {
                    iteration: it,
                    residual: rnorm,
                    damping: lambda,
                });
                return Ok(NewtonOutcome {
                    residual: rnorm,
                    x,
                    iterations: it + 1,
                    converged: false,
                    trace,
                });
            }
        };
        trace.push(NewtonRecord {
            iteration: it,
            residual: rnorm,
            damping: lambda,
        });
        let stagnated = lambda == 1.0 && delta.iter().zip(&x).all(|(d, xi)| d.abs() <= 1e-14 * xi.abs().max(1.0));
        x = x_new;
        f = f_new;
        if stagnated {
            let rnorm = scaled_max_norm(mesh, &f, &x, comps);
            return Ok(NewtonOutcome {
                x,
                iterations: it + 1,
                residual: rnorm,
                converged: true,
                trace,
            });
        }
    }
    let rnorm = scaled_max_norm(mesh, &f, &x, comps);
    let converged = rnorm <= cfg.newton_tol;
    Ok(NewtonOutcome {
        x,
        iterations: cfg.newton_max_iter,
        residual: rnorm,
        converged,
        trace,
    })
}

/// Nonlinear block Gauss-Seidel: each cell's 2x2 system is solved exactly with
/// the neighbor values frozen. Converges for the monotone systems produced by
/// the scheme, but only linearly.
fn gauss_seidel(
    mesh: &Mesh,
    kin: &Kinetics,
    dt: f64,
    prev: &[f64],
    mut x: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let (a, b) = (kin.a(), kin.b());
    let (alpha, beta) = (kin.alpha(), kin.beta());
    let ah = kin.alpha_hat();
    for _ in 0..cfg.fallback_max_sweeps {
        for (k, cell) in mesh.cells().iter().enumerate() {
            let m = cell.measure;
            let mut sum_t = 0.0;
            let mut nb_u = 0.0;
            let mut nb_v = 0.0;
            for &(l, fi) in mesh.neighbors(k) {
                let t = mesh.faces()[fi].transmissibility;
                sum_t += t;
                nb_u += t * x[2 * l];
                nb_v += t * x[2 * l + 1];
            }
            let cu = m + dt * a * sum_t;
            let cv = m + dt * b * sum_t;
            let rhs_u = m * prev[2 * k] + dt * a * nb_u;
            let rhs_v = m * prev[2 * k + 1] + dt * b * nb_v;
            if kin.k() == 0.0 {
                x[2 * k] = rhs_u / cu;
                x[2 * k + 1] = rhs_v / cv;
                continue;
            }
            // eq_u/alpha_hat + eq_v/beta_hat eliminates the reaction:
            // cu u/alpha + cv v/beta = rhs_u/alpha + rhs_v/beta
            let q = rhs_u / alpha + rhs_v / beta;
            let v_of = |u: f64| beta * (q - cu * u / alpha) / cv;
            let g = |u: f64| {
                let v = v_of(u);
                (
                    cu * u - rhs_u + dt * m * ah * (kin.r_a(u) - kin.r_b(v)),
                    cu + dt * m * ah * (kin.r_a_prime(u) + kin.r_b_prime(v) * beta * cu / (alpha * cv)),
                )
            };
            let mut lo = 0.0_f64.min(x[2 * k]);
            let mut hi = (alpha * q / cu).max(x[2 * k]).max(1e-300);
            let mut tries = 0;
            while g(lo).0 > 0.0 && tries < 200 {
                lo = 2.0 * lo - 1.0;
                tries += 1;
            }
            while g(hi).0 < 0.0 && tries < 400 {
                hi = 2.0 * hi + 1.0;
                tries += 1;
            }
            let scale = m * x[2 * k].abs().max(1.0);
            let u = solve_increasing(g, lo, hi, 1e-3 * cfg.newton_tol * scale)?;
            x[2 * k] = u;
            x[2 * k + 1] = v_of(u);
        }
        let f = residual_interleaved(mesh, kin, dt, prev, &x);
        if scaled_max_norm(mesh, &f, &x, 2) <= cfg.newton_tol {
            break;
        }
    }
    Ok(x)
}

/// Advances `prev` by one implicit step of length `dt`.
pub fn step(mesh: &Mesh, kin: &Kinetics, dt: f64, prev: &State, cfg: &SolverConfig) -> Result<(State, StepStats)> {
    check_shapes(mesh, prev, "prev")?;
    cfg.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive (got {dt})")));
    }
    let p = prev.interleaved();
    let res = |x: &[f64]| residual_interleaved(mesh, kin, dt, &p, x);
    let jac = |x: &[f64]| jacobian(mesh, kin, dt, x);
    let mut out = newton(mesh, 2, p.clone(), cfg, res, jac)?;
    let mut used_fallback = false;
    if !out.converged {
        used_fallback = true;
        let start = if out.x.iter().all(|v| v.is_finite()) {
            out.x.clone()
        } else {
            p.clone()
        };
        let gs = gauss_seidel(mesh, kin, dt, &p, start, cfg)?;
        let trace = std::mem::take(&mut out.trace);
        let iterations = out.iterations;
        out = newton(mesh, 2, gs, cfg, res, jac)?;
        out.iterations += iterations;
        if !out.converged {
            let mut full = trace;
            full.extend(out.trace);
            return Err(Error::NewtonFailure { trace: full });
        }
    }
    let next = State::from_interleaved(&out.x, prev.level + 1, prev.time + dt);
    check_step_bounds(kin, prev, &next, cfg.newton_tol)?;
    let stats = StepStats {
        level: next.level,
        time: next.time,
        dt,
        newton_iterations: out.iterations,
        residual: out.residual,
        used_fallback,
    };
    Ok((next, stats))
}

/// One-step form of the sup-norm estimate: with `U, V` the maxima of the
/// previous level, `0 <= u <= U + alpha/beta V` and `0 <= v <= V + beta/alpha U`.
fn check_step_bounds(kin: &Kinetics, prev: &State, next: &State, tol: f64) -> Result<()> {
    let umax = prev.max_u().max(0.0);
    let vmax = prev.max_v().max(0.0);
    let ub = umax + kin.alpha() / kin.beta() * vmax;
    let vb = vmax + kin.beta() / kin.alpha() * umax;
    let slack = 10.0 * tol;
    for (k, (&u, &v)) in next.u.iter().zip(&next.v).enumerate() {
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::Consistency(format!("non-finite value in cell {k}")));
        }
        if u < -slack * ub.max(1.0) || v < -slack * vb.max(1.0) {
            return Err(Error::Consistency(format!(
                "negative concentration in cell {k}: u = {u:e}, v = {v:e}"
            )));
        }
        if u > ub + slack * ub.max(1.0) || v > vb + slack * vb.max(1.0) {
            return Err(Error::Consistency(format!(
                "cell {k} exceeds the sup-norm envelope: u = {u} (bound {ub}), v = {v} (bound {vb})"
            )));
        }
    }
    Ok(())
}

/// Runs the scheme over every step of `grid`.
pub fn integrate(
    mesh: &Mesh,
    kin: &Kinetics,
    grid: &TimeGrid,
    initial: &State,
    cfg: &SolverConfig,
    output: &OutputLevels,
) -> Result<Trajectory> {
    check_shapes(mesh, initial, "initial")?;
    let last = grid.n_steps();
    let mut current = State {
        level: 0,
        time: grid.levels()[0],
        ..initial.clone()
    };
    let mut states = vec![current.clone()];
    let mut stats = Vec::with_capacity(last);
    for n in 0..last {
        let (mut next, st) = step(mesh, kin, grid.step(n), &current, cfg).map_err(|e| e.at_level(n + 1))?;
        // pin the time to the grid value instead of the accumulated sum
        next.time = grid.levels()[n + 1];
        stats.push(StepStats { time: next.time, ..st });
        if output.keeps(n + 1, last) {
            states.push(next.clone());
        }
        current = next;
    }
    Ok(Trajectory { states, stats })
}

/// Implicit Euler solution of the space-homogeneous system
/// `u' = alpha k (r_B(v) - r_A(u))`, `v' = beta k (r_A(u) - r_B(v))` started
/// at `(U, V)`. This is the scheme itself on spatially constant data, so it
/// bounds any solution whose initial data lies below `(U, V)`.
pub fn ode_upper_solution(kin: &Kinetics, grid: &TimeGrid, u_bound: f64, v_bound: f64) -> Result<Vec<(f64, f64)>> {
    if !(u_bound >= 0.0) || !(v_bound >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bounds must be nonnegative (got {u_bound}, {v_bound})"
        )));
    }
    let (alpha, beta, k) = (kin.alpha(), kin.beta(), kin.k());
    let w = u_bound / alpha + v_bound / beta;
    let mut out = Vec::with_capacity(grid.n_levels());
    out.push((u_bound, v_bound));
    let mut up = u_bound;
    for (n, dt) in grid.steps().enumerate() {
        let v_of = |u: f64| beta * (w - u / alpha);
        let g = |u: f64| {
            (
                u - up + alpha * k * dt * (kin.r_a(u) - kin.r_b(v_of(u))),
                1.0 + alpha * k * dt * (kin.r_a_prime(u) + kin.r_b_prime(v_of(u)) * beta / alpha),
            )
        };
        // roundoff in g grows with the reaction term, which g' measures
        let tol = 1e-14 * up.max(1.0) * g(up).1;
        let u = solve_increasing(g, 0.0, alpha * w, tol).map_err(|e| e.at_level(n + 1))?;
        out.push((u, v_of(u)));
        up = u;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Dimerisation;

    fn linear_kinetics(k: f64) -> Kinetics {
        Kinetics::power_law(1.0, 1.0, 1.0, 1.0, k, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn projection_of_constant_and_linear_data() {
        let mesh = Mesh::uniform_1d(1.0, 7).unwrap();
        let s = project_initial(&mesh, |_| 0.3, |_| 2.0, 1).unwrap();
        assert!(s.u.iter().all(|&u| u == 0.3));
        assert!(s.v.iter().all(|&v| v == 2.0));
        let s = project_initial(&mesh, |x| x[0], |_| 0.0, 1).unwrap();
        for (u, c) in s.u.iter().zip(mesh.cells()) {
            assert!((u - c.center[0]).abs() < 1e-15);
        }
        assert!(project_initial(&mesh, |x| x[0] - 0.5, |_| 0.0, 2).is_err());
    }

    #[test]
    fn residual_vanishes_at_equilibrium() {
        let mesh = Mesh::uniform_1d(0.1, 5).unwrap();
        let kin = Dimerisation::reference().kinetics().unwrap();
        let (u, v) = kin.equilibrium_from_w(0.2).unwrap();
        let s = State::constant(5, u, v);
        let (fu, fv) = residual(&mesh, &kin, 10.0, &s, &s).unwrap();
        assert!(fu.iter().chain(&fv).all(|f| f.abs() < 1e-18));
    }

    #[test]
    fn residual_of_pure_identity_dynamics() {
        let mesh = Mesh::uniform_1d(2.0, 1).unwrap();
        let kin = linear_kinetics(0.0);
        let prev = State::constant(1, 0.4, 0.1);
        let guess = State::constant(1, 0.7, 0.1);
        let (fu, fv) = residual(&mesh, &kin, 1.0, &prev, &guess).unwrap();
        assert!((fu[0] - 2.0 * 0.3).abs() < 1e-15);
        assert_eq!(fv[0], 0.0);
    }

    #[test]
    fn residual_flux_term_on_two_cells() {
        // uniform [0, 2] in two cells: m = 1, d = 1, T = 1
        let mesh = Mesh::uniform_1d(2.0, 2).unwrap();
        let kin = linear_kinetics(0.0);
        let s = State::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let (fu, _) = residual(&mesh, &kin, 1.0, &s, &s).unwrap();
        assert_eq!(fu, vec![-1.0, 1.0]);
    }

    #[test]
    fn single_cell_linear_kinetics_step() {
        let mesh = Mesh::uniform_1d(1.0, 1).unwrap();
        let kin = linear_kinetics(1.0);
        let prev = State::constant(1, 1.0, 0.0);
        let (next, st) = step(&mesh, &kin, 1.0, &prev, &SolverConfig::default()).unwrap();
        assert!((next.u[0] - 2.0 / 3.0).abs() < 1e-13);
        assert!((next.v[0] - 1.0 / 3.0).abs() < 1e-13);
        assert_eq!(next.level, 1);
        assert!(st.residual <= 1e-12);
        assert!(!st.used_fallback);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let mesh = Mesh::uniform_1d(0.1, 8).unwrap();
        let kin = Dimerisation::reference().kinetics().unwrap();
        let (u, v) = kin.equilibrium_from_w(0.3).unwrap();
        let s = State::constant(8, u, v);
        let (next, _) = step(&mesh, &kin, 1e4, &s, &SolverConfig::default()).unwrap();
        for k in 0..8 {
            assert!((next.u[k] - u).abs() < 1e-12);
            assert!((next.v[k] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_solvers_give_the_same_step() {
        let mesh = Mesh::uniform_1d(0.1, 12).unwrap();
        let kin = Dimerisation::reference().kinetics().unwrap().with_k(10.0).unwrap();
        let prev = project_initial(&mesh, |x| 0.5 * x[0] * 10.0, |x| 0.25 * (1.0 - 10.0 * x[0]), 2).unwrap();
        let mut results = Vec::new();
        for ls in [
            LinearSolver::DenseDirect,
            LinearSolver::SparseDirect,
            LinearSolver::Bicgstab {
                tol: 1e-14,
                max_iter: 1000,
            },
        ] {
            let cfg = SolverConfig {
                linear_solver: ls,
                ..SolverConfig::default()
            };
            results.push(step(&mesh, &kin, 5e4, &prev, &cfg).unwrap().0);
        }
        for r in &results[1..] {
            for k in 0..12 {
                assert!((r.u[k] - results[0].u[k]).abs() < 1e-12);
                assert!((r.v[k] - results[0].v[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_seidel_fallback_converges() {
        let mesh = Mesh::uniform_1d(0.1, 10).unwrap();
        let kin = Dimerisation::reference().kinetics().unwrap().with_k(100.0).unwrap();
        let prev = project_initial(&mesh, |x| 5.0 * x[0], |x| 0.5 - 5.0 * x[0], 1).unwrap();
        // a single Newton iteration cannot converge, forcing the fallback path
        let cfg = SolverConfig {
            newton_max_iter: 1,
            ..SolverConfig::default()
        };
        let (gs, st) = step(&mesh, &kin, 1e4, &prev, &cfg).unwrap();
        assert!(st.used_fallback);
        let (nt, _) = step(&mesh, &kin, 1e4, &prev, &SolverConfig::default()).unwrap();
        for k in 0..10 {
            assert!((gs.u[k] - nt.u[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn integrate_with_no_reaction_keeps_constants() {
        let mesh = Mesh::uniform_1d(1.0, 6).unwrap();
        let kin = linear_kinetics(0.0);
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let traj = integrate(
            &mesh,
            &kin,
            &grid,
            &State::constant(6, 0.4, 0.9),
            &SolverConfig::default(),
            &OutputLevels::All,
        )
        .unwrap();
        assert_eq!(traj.states.len(), 6);
        assert!(traj.is_complete(&grid));
        for s in &traj.states {
            assert!(s.u.iter().all(|&u| (u - 0.4).abs() < 1e-15));
            assert!(s.v.iter().all(|&v| (v - 0.9).abs() < 1e-15));
        }
        assert_eq!(traj.last().time, 1.0);
    }

    #[test]
    fn output_levels_selection() {
        let mesh = Mesh::uniform_1d(1.0, 2).unwrap();
        let kin = linear_kinetics(1.0);
        let grid = TimeGrid::uniform(1.0, 7).unwrap();
        let init = State::constant(2, 1.0, 0.0);
        let cfg = SolverConfig::default();
        let t = integrate(&mesh, &kin, &grid, &init, &cfg, &OutputLevels::Every(3)).unwrap();
        assert_eq!(t.states.iter().map(|s| s.level).collect::<Vec<_>>(), vec![0, 3, 6, 7]);
        assert_eq!(t.stats.len(), 7);
        let t = integrate(&mesh, &kin, &grid, &init, &cfg, &OutputLevels::Listed(vec![2])).unwrap();
        assert_eq!(t.states.iter().map(|s| s.level).collect::<Vec<_>>(), vec![0, 2, 7]);
    }

    #[test]
    fn ode_upper_solution_examples() {
        let kin = linear_kinetics(1.0);
        let grid = TimeGrid::uniform(3.0, 3).unwrap();
        let seq = ode_upper_solution(&kin, &grid, 1.0, 0.0).unwrap();
        assert!((seq[1].0 - 2.0 / 3.0).abs() < 1e-14);
        assert!((seq[1].1 - 1.0 / 3.0).abs() < 1e-14);
        for (u, v) in &seq {
            assert!((u + v - 1.0).abs() < 1e-12);
        }
        let dim = Dimerisation::reference().kinetics().unwrap();
        let (u, v) = dim.equilibrium_from_w(0.4).unwrap();
        let seq = ode_upper_solution(&dim, &grid, u, v).unwrap();
        assert!(seq.iter().all(|&(a, b)| (a - u).abs() < 1e-13 && (b - v).abs() < 1e-13));
        assert!(ode_upper_solution(&dim, &grid, -1.0, 0.0).is_err());
    }
}
