//! Discrete functionals of computed trajectories: conserved mass, sup-norm
//! envelope, weighted L1 distance, gradient energy, reaction defect, the
//! entropy-type Lyapunov functional, space/time translate seminorms, and the
//! distance of a fast-reaction run to the limit problem.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::kinetics::{Dimerisation, Kinetics};
use crate::limit::{WState, WTrajectory};
use crate::mesh::{Mesh, TimeGrid};
use crate::quadrature::adaptive_simpson;
use crate::scheme::{State, Trajectory};

/// Absolute tolerance of the entropy integrals.
pub const LYAPUNOV_QUAD_TOL: f64 = 1e-12;

fn require_complete(traj: &Trajectory, grid: &TimeGrid) -> Result<()> {
    if !traj.is_complete(grid) {
        return Err(Error::Mismatch(format!(
            "trajectory holds {} states but the grid has {} levels",
            traj.states.len(),
            grid.n_levels()
        )));
    }
    Ok(())
}

/// `sum_faces T_KL (f_L - f_K)^2` of one cell field.
pub fn face_energy(mesh: &Mesh, f: &[f64]) -> f64 {
    mesh.faces()
        .iter()
        .map(|face| {
            let (k, l) = face.cells;
            face.transmissibility * (f[l] - f[k]).powi(2)
        })
        .sum()
}

/// `E = sum_n dt_n sum_{faces} T_KL (f_L^{n+1} - f_K^{n+1})^2` for `u` and `v`.
/// Every interior face is counted once.
pub fn gradient_energy(mesh: &Mesh, grid: &TimeGrid, traj: &Trajectory) -> Result<(f64, f64)> {
    require_complete(traj, grid)?;
    let mut eu = 0.0;
    let mut ev = 0.0;
    for (n, dt) in grid.steps().enumerate() {
        let s = &traj.states[n + 1];
        eu += dt * face_energy(mesh, &s.u);
        ev += dt * face_energy(mesh, &s.v);
    }
    Ok((eu, ev))
}

fn reaction_defect_level(mesh: &Mesh, kin: &Kinetics, s: &State) -> f64 {
    mesh.measures()
        .zip(s.u.iter().zip(&s.v))
        .map(|(m, (&u, &v))| m * (kin.r_a(u) - kin.r_b(v)).powi(2))
        .sum()
}

/// `R = k sum_n dt_n sum_K m_K (r_A(u_K^{n+1}) - r_B(v_K^{n+1}))^2`.
pub fn reaction_defect(mesh: &Mesh, grid: &TimeGrid, kin: &Kinetics, traj: &Trajectory) -> Result<f64> {
    require_complete(traj, grid)?;
    Ok(kin.k()
        * grid
            .steps()
            .enumerate()
            .map(|(n, dt)| dt * reaction_defect_level(mesh, kin, &traj.states[n + 1]))
            .sum::<f64>())
}

/// The entropy functional `sum_K m_K (V_A(u_K) + V_B(v_K))` relative to an
/// equilibrium pair `(a, b)`, `r_A(a) = r_B(b)`, with
/// `V_A(s) = (s ln(r_A(s)/r_A(a)) + int_s^a sigma r_A'(sigma)/r_A(sigma) dsigma) / alpha`
/// and `V_B` likewise.
#[derive(Debug, Clone)]
pub struct Lyapunov<'a> {
    kin: &'a Kinetics,
    reference: (f64, f64),
    /// Continuous extensions of `s r'(s)/r(s)` at 0.
    slope_at_zero: (f64, f64),
}

impl<'a> Lyapunov<'a> {
    pub fn new(kin: &'a Kinetics, reference: (f64, f64)) -> Result<Self> {
        let (a, b) = reference;
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference pair must be positive (got ({a}, {b}))"
            )));
        }
        let (ra, rb) = (kin.r_a(a), kin.r_b(b));
        if (ra - rb).abs() > 1e-10 * (1.0 + ra.abs()) {
            return Err(Error::InvalidArgument(format!(
                "reference pair ({a}, {b}) is not in chemical equilibrium: r_A = {ra}, r_B = {rb}"
            )));
        }
        let sa = 1e-12 * a;
        let sb = 1e-12 * b;
        Ok(Self {
            kin,
            reference,
            slope_at_zero: (
                sa * kin.r_a_prime(sa) / kin.r_a(sa),
                sb * kin.r_b_prime(sb) / kin.r_b(sb),
            ),
        })
    }

    /// Reference pair with `a` the mean of `u` over the domain and
    /// `b = eta(a)`. Falls back to the equilibrium carrying the mean of `w`
    /// when the mean of `u` vanishes.
    pub fn default_reference(mesh: &Mesh, kin: &Kinetics, initial: &State) -> Result<(f64, f64)> {
        let total = mesh.total_measure();
        let mean_u = mesh.measures().zip(&initial.u).map(|(m, u)| m * u).sum::<f64>() / total;
        if mean_u > 0.0 {
            return Ok((mean_u, kin.eta(mean_u)?));
        }
        let mean_w = initial.mass_w(mesh, kin) / total;
        if mean_w > 0.0 {
            return kin.equilibrium_from_w(mean_w);
        }
        Err(Error::InvalidArgument(
            "zero initial data has no positive equilibrium reference".into(),
        ))
    }

    pub fn reference(&self) -> (f64, f64) {
        self.reference
    }

    fn entropy(
        s: f64,
        a: f64,
        weight: f64,
        slope0: f64,
        value: impl Fn(f64) -> f64,
        derivative: impl Fn(f64) -> f64,
    ) -> f64 {
        let integrand = |x: f64| {
            if x <= 0.0 {
                slope0
            } else {
                x * derivative(x) / value(x)
            }
        };
        let log_term = if s > 0.0 { s * (value(s) / value(a)).ln() } else { 0.0 };
        (log_term + adaptive_simpson(&integrand, s, a, LYAPUNOV_QUAD_TOL)) / weight
    }

    pub fn v_a(&self, s: f64) -> f64 {
        let k = self.kin;
        Self::entropy(
            s,
            self.reference.0,
            k.alpha(),
            self.slope_at_zero.0,
            |x| k.r_a(x),
            |x| k.r_a_prime(x),
        )
    }

    pub fn v_b(&self, s: f64) -> f64 {
        let k = self.kin;
        Self::entropy(
            s,
            self.reference.1,
            k.beta(),
            self.slope_at_zero.1,
            |x| k.r_b(x),
            |x| k.r_b_prime(x),
        )
    }

    pub fn evaluate(&self, mesh: &Mesh, state: &State) -> Result<f64> {
        mesh.ensure_len("state.u", state.u.len())?;
        mesh.ensure_len("state.v", state.v.len())?;
        if state.u.iter().chain(&state.v).any(|&x| x < 0.0) {
            return Err(Error::InvalidArgument(
                "Lyapunov functional needs a nonnegative state".into(),
            ));
        }
        Ok(mesh
            .measures()
            .zip(state.u.iter().zip(&state.v))
            .map(|(m, (&u, &v))| m * (self.v_a(u) + self.v_b(v)))
            .sum())
    }
}

/// Convenience wrapper around [`Lyapunov::evaluate`].
pub fn lyapunov(mesh: &Mesh, kin: &Kinetics, state: &State, reference: (f64, f64)) -> Result<f64> {
    Lyapunov::new(kin, reference)?.evaluate(mesh, state)
}

/// `sum_K m_K (|u1 - u2| / alpha_hat + |v1 - v2| / beta_hat)`. For `k = 0`
/// the weights `1/alpha`, `1/beta` are used instead.
pub fn l1_distance(mesh: &Mesh, kin: &Kinetics, s1: &State, s2: &State) -> Result<f64> {
    for s in [s1, s2] {
        mesh.ensure_len("state.u", s.u.len())?;
        mesh.ensure_len("state.v", s.v.len())?;
    }
    let (wa, wb) = if kin.k() > 0.0 {
        (1.0 / kin.alpha_hat(), 1.0 / kin.beta_hat())
    } else {
        (1.0 / kin.alpha(), 1.0 / kin.beta())
    };
    Ok(mesh
        .measures()
        .enumerate()
        .map(|(i, m)| m * (wa * (s1.u[i] - s2.u[i]).abs() + wb * (s1.v[i] - s2.v[i]).abs()))
        .sum())
}

/// Sup-norm distances between a reaction-diffusion state and the equilibrium
/// reconstructed from a limit-problem state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitComparison {
    /// `max_K |u_K - H^{-1}(w_K)|`.
    pub j_u: f64,
    /// `max_K |v_K - eta(H^{-1}(w_K))|`.
    pub j_v: f64,
    /// `max_K |u_K - h(w_K)|` with the printed closed form `h`.
    pub j_u_printed: Option<f64>,
    /// `max_K |v_K - g(h(w_K))|` with the printed closed forms.
    pub j_v_printed: Option<f64>,
}

pub fn compare_states_to_limit(
    mesh: &Mesh,
    kin: &Kinetics,
    state: &State,
    limit: &WState,
    closed_forms: Option<&Dimerisation>,
) -> Result<LimitComparison> {
    mesh.ensure_len("state.u", state.u.len())?;
    mesh.ensure_len("limit.w", limit.w.len())?;
    let mut out = LimitComparison {
        j_u: 0.0,
        j_v: 0.0,
        j_u_printed: closed_forms.map(|_| 0.0),
        j_v_printed: closed_forms.map(|_| 0.0),
    };
    for (k, &w) in limit.w.iter().enumerate() {
        let (u_lim, v_lim) = kin.equilibrium_from_w(w.max(0.0))?;
        out.j_u = out.j_u.max((state.u[k] - u_lim).abs());
        out.j_v = out.j_v.max((state.v[k] - v_lim).abs());
        if let Some(d) = closed_forms {
            let h = d.h_closed_form(w.max(0.0))?;
            let ju = out.j_u_printed.get_or_insert(0.0);
            *ju = ju.max((state.u[k] - h).abs());
            let jv = out.j_v_printed.get_or_insert(0.0);
            *jv = jv.max((state.v[k] - d.g_closed_form(h)).abs());
        }
    }
    Ok(out)
}

/// Compares the final levels of the two trajectories, which must end at the
/// same time on the same mesh.
pub fn compare_to_limit(
    mesh: &Mesh,
    kin: &Kinetics,
    traj: &Trajectory,
    limit: &WTrajectory,
    closed_forms: Option<&Dimerisation>,
) -> Result<LimitComparison> {
    let (s, w) = (traj.last(), limit.last());
    if (s.time - w.time).abs() > 1e-12 * s.time.abs().max(1.0) {
        return Err(Error::Mismatch(format!("final times differ: {} vs {}", s.time, w.time)));
    }
    compare_states_to_limit(mesh, kin, s, w, closed_forms)
}

/// Cell intervals `[lo, hi]` of a 1D mesh, in order.
fn intervals_1d(mesh: &Mesh) -> Result<Vec<(f64, f64)>> {
    if mesh.dim() != 1 {
        return Err(Error::InvalidArgument(
            "translate seminorms are implemented for 1D meshes".into(),
        ));
    }
    let mut iv: Vec<(f64, f64)> = mesh
        .cells()
        .iter()
        .map(|c| (c.center[0] - 0.5 * c.measure, c.center[0] + 0.5 * c.measure))
        .collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(iv)
}

fn cell_at(intervals: &[(f64, f64)], x: f64) -> usize {
    intervals.partition_point(|&(_, hi)| hi < x).min(intervals.len() - 1)
}

fn cell_order(mesh: &Mesh) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mesh.n_cells()).collect();
    order.sort_by(|&a, &b| mesh.cells()[a].center[0].total_cmp(&mesh.cells()[b].center[0]));
    order
}

/// `int_0^T int (f(x + xi, t) - f(x, t))^2 dx dt` over `{x : x, x + xi in Omega}`
/// for the piecewise-constant reconstruction of `levels` (level `n + 1` is the
/// value on `(t_n, t_{n+1}]`).
pub fn space_translate(mesh: &Mesh, grid: &TimeGrid, levels: &[Vec<f64>], xi: f64) -> Result<f64> {
    if levels.len() != grid.n_levels() {
        return Err(Error::Mismatch("one field per time level is required".into()));
    }
    let iv = intervals_1d(mesh)?;
    let order = cell_order(mesh);
    let (x0, x1) = (iv[0].0, iv[iv.len() - 1].1);
    let shift = xi.abs();
    if shift > x1 - x0 {
        return Err(Error::InvalidArgument(format!(
            "shift {xi} exceeds the domain length {}",
            x1 - x0
        )));
    }
    if shift == 0.0 {
        return Ok(0.0);
    }
    let mut breaks: Vec<f64> = iv
        .iter()
        .flat_map(|&(lo, hi)| [lo, hi, lo - shift, hi - shift])
        .filter(|&b| b >= x0 && b <= x1 - shift)
        .collect();
    breaks.push(x0);
    breaks.push(x1 - shift);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // pairs of (sub-interval length, cell at x, cell at x + xi)
    let pieces: Vec<(f64, usize, usize)> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[1] - w[0], order[cell_at(&iv, mid)], order[cell_at(&iv, mid + shift)])
        })
        .collect();
    Ok(grid
        .steps()
        .enumerate()
        .map(|(n, dt)| {
            let f = &levels[n + 1];
            dt * pieces
                .iter()
                .map(|&(len, a, b)| len * (f[b] - f[a]).powi(2))
                .sum::<f64>()
        })
        .sum())
}

/// `int_0^{T - tau} int_Omega (f(x, t + tau) - f(x, t))^2 dx dt` for the
/// piecewise-constant reconstruction of `levels`.
pub fn time_translate(mesh: &Mesh, grid: &TimeGrid, levels: &[Vec<f64>], tau: f64) -> Result<f64> {
    if levels.len() != grid.n_levels() {
        return Err(Error::Mismatch("one field per time level is required".into()));
    }
    let t_end = grid.final_time();
    if !(tau >= 0.0) || tau > t_end {
        return Err(Error::InvalidArgument(format!(
            "time lag {tau} must lie in [0, {t_end}]"
        )));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let t = grid.levels();
    let mut breaks: Vec<f64> = t
        .iter()
        .flat_map(|&s| [s, s - tau])
        .filter(|&b| b >= 0.0 && b <= t_end - tau)
        .collect();
    breaks.push(t_end - tau);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // level whose value holds on (t_n, t_{n+1}]
    let level_at = |s: f64| t.partition_point(|&x| x < s).clamp(1, t.len() - 1);
    Ok(breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let (fa, fb) = (&levels[level_at(mid)], &levels[level_at(mid + tau)]);
            (w[1] - w[0])
                * mesh
                    .measures()
                    .zip(fa.iter().zip(fb))
                    .map(|(m, (a, b))| m * (b - a).powi(2))
                    .sum::<f64>()
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslateKind {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslateRow {
    pub field: &'static str,
    pub kind: TranslateKind,
    pub shift: f64,
    pub value: f64,
}

/// Space and time translate seminorms of `u`, `v` and `w`.
pub fn translate_seminorms(
    mesh: &Mesh,
    grid: &TimeGrid,
    kin: &Kinetics,
    traj: &Trajectory,
    shifts: &[f64],
    lags: &[f64],
) -> Result<Vec<TranslateRow>> {
    require_complete(traj, grid)?;
    let u: Vec<Vec<f64>> = traj.states.iter().map(|s| s.u.clone()).collect();
    let v: Vec<Vec<f64>> = traj.states.iter().map(|s| s.v.clone()).collect();
    let w: Vec<Vec<f64>> = traj.states.iter().map(|s| s.w(kin)).collect();
    let mut rows = Vec::new();
    for (field, data) in [("u", &u), ("v", &v), ("w", &w)] {
        for &xi in shifts {
            rows.push(TranslateRow {
                field,
                kind: TranslateKind::Space,
                shift: xi,
                value: space_translate(mesh, grid, data, xi)?,
            });
        }
        for &tau in lags {
            rows.push(TranslateRow {
                field,
                kind: TranslateKind::Time,
                shift: tau,
                value: time_translate(mesh, grid, data, tau)?,
            });
        }
    }
    Ok(rows)
}

/// Functionals evaluated at one time level. Energies and defect are
/// cumulative sums up to this level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub time: f64,
    pub mass_w: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub lyapunov: f64,
    pub gradient_energy_u: f64,
    pub gradient_energy_v: f64,
    pub reaction_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub k: f64,
    pub records: Vec<LevelRecord>,
    pub lyapunov_reference: (f64, f64),
    pub limit: Option<LimitComparison>,
}

impl DiagnosticsReport {
    /// Evaluates every functional on a complete trajectory.
    pub fn build(
        mesh: &Mesh,
        grid: &TimeGrid,
        kin: &Kinetics,
        traj: &Trajectory,
        reference: Option<(f64, f64)>,
    ) -> Result<Self> {
        require_complete(traj, grid)?;
        let reference = match reference {
            Some(r) => r,
            None => Lyapunov::default_reference(mesh, kin, traj.initial())?,
        };
        let lyap = Lyapunov::new(kin, reference)?;
        let mut records = Vec::with_capacity(traj.states.len());
        let (mut eu, mut ev, mut r) = (0.0, 0.0, 0.0);
        for (n, s) in traj.states.iter().enumerate() {
            if n > 0 {
                let dt = grid.step(n - 1);
                eu += dt * face_energy(mesh, &s.u);
                ev += dt * face_energy(mesh, &s.v);
                r += kin.k() * dt * reaction_defect_level(mesh, kin, s);
            }
            records.push(LevelRecord {
                level: s.level,
                time: s.time,
                mass_w: s.mass_w(mesh, kin),
                u_min: s.min_u(),
                u_max: s.max_u(),
                v_min: s.min_v(),
                v_max: s.max_v(),
                lyapunov: lyap.evaluate(mesh, s)?,
                gradient_energy_u: eu,
                gradient_energy_v: ev,
                reaction_defect: r,
            });
        }
        Ok(Self {
            k: kin.k(),
            records,
            lyapunov_reference: reference,
            limit: None,
        })
    }

    pub fn with_limit(mut self, cmp: LimitComparison) -> Self {
        self.limit = Some(cmp);
        self
    }

    pub fn last(&self) -> &LevelRecord {
        self.records.last().expect("report has at least one record")
    }

    /// Largest relative deviation of the conserved mass from its initial value.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.records[0].mass_w;
        self.records
            .iter()
            .map(|r| (r.mass_w - m0).abs() / m0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Largest one-step increase of the Lyapunov functional (0 if it never grows).
    pub fn max_lyapunov_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].lyapunov - w[0].lyapunov)
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "level",
            "t",
            "mass_w",
            "u_min",
            "u_max",
            "v_min",
            "v_max",
            "lyapunov",
            "gradient_energy_u",
            "gradient_energy_v",
            "reaction_defect",
        ])?;
        for r in &self.records {
            let mut row = vec![r.level.to_string()];
            row.extend(
                [
                    r.time,
                    r.mass_w,
                    r.u_min,
                    r.u_max,
                    r.v_min,
                    r.v_max,
                    r.lyapunov,
                    r.gradient_energy_u,
                    r.gradient_energy_v,
                    r.reaction_defect,
                ]
                .iter()
                .map(|x| format!("{x:.17e}")),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.last();
        writeln!(
            f,
            "diagnostics (k = {:e}, {} levels, T = {:e})",
            self.k,
            self.records.len(),
            last.time
        )?;
        writeln!(f, "  max relative mass drift     {:.3e}", self.max_mass_drift())?;
        writeln!(
            f,
            "  u range at T                [{:.6e}, {:.6e}]",
            last.u_min, last.u_max
        )?;
        writeln!(
            f,
            "  v range at T                [{:.6e}, {:.6e}]",
            last.v_min, last.v_max
        )?;
        writeln!(
            f,
            "  Lyapunov (ref {:.4e}, {:.4e})  {:.6e} -> {:.6e}, max increase {:.3e}",
            self.lyapunov_reference.0,
            self.lyapunov_reference.1,
            self.records[0].lyapunov,
            last.lyapunov,
            self.max_lyapunov_increase()
        )?;
        writeln!(
            f,
            "  gradient energy u, v        {:.6e}, {:.6e}",
            last.gradient_energy_u, last.gradient_energy_v
        )?;
        write!(f, "  reaction defect             {:.6e}", last.reaction_defect)?;
        if let Some(c) = &self.limit {
            write!(f, "\n  J_u, J_v vs limit           {:.6e}, {:.6e}", c.j_u, c.j_v)?;
            if let (Some(a), Some(b)) = (c.j_u_printed, c.j_v_printed) {
                write!(f, "\n  J_u, J_v (printed h, g)     {a:.6e}, {b:.6e}")?;
            }
        }
        Ok(())
    }
}
