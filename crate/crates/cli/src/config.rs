//! JSON experiment configuration. All physical quantities are SI: lengths in
//! metres, times in seconds, diffusion coefficients in m^2/s, concentrations
//! in mol/m^3 (any consistent unit works; the solver is unit-agnostic).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use fastreact::{Dimerisation, Kinetics, Mesh, OutputLevels, SolverConfig, TimeGrid};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mesh: MeshSpec,
    /// Time grid of the reaction-diffusion solver.
    pub time: TimeSpec,
    /// Time grid of the limit solver; must end at the same final time.
    /// Omitted: the limit problem is not solved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_time: Option<TimeSpec>,
    pub kinetics: KineticsSpec,
    /// Rate factor `k` (dimensionless multiplier of the reaction term), or a
    /// list of them for a sweep.
    pub k: KValues,
    pub initial: InitialSpec,
    /// Gauss-Legendre points per cell for the initial projection (1 to 5).
    #[serde(default = "default_quadrature_order")]
    pub quadrature_order: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_quadrature_order() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Domain length `X` of `[0, X]`, metres.
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeSpec {
    /// `steps` equal steps up to `final_time` seconds.
    Uniform { final_time: f64, steps: usize },
    /// Geometric steps `initial_step * growth^n`, last step shortened to end
    /// at `final_time`.
    Ramped {
        final_time: f64,
        initial_step: f64,
        growth: f64,
    },
}

impl TimeSpec {
    pub fn final_time(&self) -> f64 {
        match *self {
            TimeSpec::Uniform { final_time, .. } | TimeSpec::Ramped { final_time, .. } => final_time,
        }
    }

    pub fn build(&self) -> CliResult<TimeGrid> {
        Ok(match *self {
            TimeSpec::Uniform { final_time, steps } => TimeGrid::uniform(final_time, steps)?,
            TimeSpec::Ramped {
                final_time,
                initial_step,
                growth,
            } => TimeGrid::ramped(initial_step, growth, final_time)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KineticsSpec {
    /// `2A <-> B` with `r_A(u) = k1 u^2`, `r_B(v) = k2 v`.
    Dimerisation { k1: f64, k2: f64, a: f64, b: f64 },
    /// `alpha A <-> beta B` with `r_A(u) = c_a u^p`, `r_B(v) = c_b v^q`.
    PowerLaw {
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
        c_a: f64,
        p: f64,
        c_b: f64,
        q: f64,
    },
}

impl KineticsSpec {
    pub fn dimerisation_reference() -> Self {
        let d = Dimerisation::reference();
        KineticsSpec::Dimerisation {
            k1: d.k1,
            k2: d.k2,
            a: d.a,
            b: d.b,
        }
    }

    pub fn build(&self, k: f64) -> CliResult<Kinetics> {
        Ok(match *self {
            KineticsSpec::Dimerisation { k1, k2, a, b } => Dimerisation { k1, k2, a, b, k }.kinetics()?,
            KineticsSpec::PowerLaw {
                alpha,
                beta,
                a,
                b,
                c_a,
                p,
                c_b,
                q,
            } => Kinetics::power_law(alpha, beta, a, b, k, c_a, p, c_b, q)?,
        })
    }

    /// Closed-form maps, available for the dimerisation only.
    pub fn dimerisation(&self, k: f64) -> Option<Dimerisation> {
        match *self {
            KineticsSpec::Dimerisation { k1, k2, a, b } => Some(Dimerisation { k1, k2, a, b, k }),
            KineticsSpec::PowerLaw { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KValues {
    Single(f64),
    Sweep(Vec<f64>),
}

impl KValues {
    pub fn values(&self) -> Vec<f64> {
        match self {
            KValues::Single(k) => vec![*k],
            KValues::Sweep(ks) => ks.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// The sine/cosine profiles of the dimerisation benchmark on `[0, 0.1]`.
    Dimerisation,
    Constant {
        u: f64,
        v: f64,
    },
    /// Samples at increasing abscissae `x`, linearly interpolated and held
    /// constant outside the sampled range.
    Tabulated {
        x: Vec<f64>,
        u: Vec<f64>,
        v: Vec<f64>,
    },
}

// Both profiles are nonnegative on [0, 0.1]; the clamp removes the roundoff
// of sin/cos at their zeros (e.g. cos(pi/2) ~ -4e-17 at x = 0.07).

/// `u0` of the dimerisation benchmark.
pub fn dimerisation_u0(x: f64) -> f64 {
    if x <= 0.03 {
        0.0
    } else {
        (0.5 * (50.0 * PI / 7.0 * (x - 0.03)).sin()).max(0.0)
    }
}

/// `v0` of the dimerisation benchmark.
pub fn dimerisation_v0(x: f64) -> f64 {
    if x <= 0.07 {
        (0.25 * (50.0 * PI / 7.0 * x).cos()).max(0.0)
    } else {
        0.0
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&s| s <= x);
    if i == 0 {
        ys[0]
    } else if i == xs.len() {
        ys[xs.len() - 1]
    } else {
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        ys[i - 1] + t * (ys[i] - ys[i - 1])
    }
}

impl InitialSpec {
    pub fn validate(&self) -> CliResult<()> {
        match self {
            InitialSpec::Dimerisation => Ok(()),
            InitialSpec::Constant { u, v } => {
                if !(*u >= 0.0 && *v >= 0.0 && u.is_finite() && v.is_finite()) {
                    return Err(CliError::Config(
                        "initial.u and initial.v must be nonnegative and finite".into(),
                    ));
                }
                Ok(())
            }
            InitialSpec::Tabulated { x, u, v } => {
                if x.is_empty() || x.len() != u.len() || x.len() != v.len() {
                    return Err(CliError::Config(
                        "initial.x, initial.u, initial.v must be nonempty and of equal length".into(),
                    ));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(CliError::Config("initial.x must be strictly increasing".into()));
                }
                if u.iter().chain(v).any(|&y| !(y >= 0.0) || !y.is_finite()) {
                    return Err(CliError::Config(
                        "initial samples must be nonnegative and finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `(u0(x), v0(x))` at a point.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            InitialSpec::Dimerisation => (dimerisation_u0(x), dimerisation_v0(x)),
            InitialSpec::Constant { u, v } => (*u, *v),
            InitialSpec::Tabulated { x: xs, u, v } => (interpolate(xs, u, x), interpolate(xs, v, x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Levels written to the trajectory CSVs; diagnostics always use all.
    pub levels: OutputLevels,
    /// Space shifts (m) for the translate seminorm table; none by default.
    pub translate_shifts: Vec<f64>,
    /// Time lags (s) for the translate seminorm table.
    pub translate_lags: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Accepts a JSON document or a run manifest with an embedded config.
    pub fn from_text(text: &str) -> CliResult<Self> {
        match crate::manifest::embedded_config(text) {
            Some(json) => Self::from_json(json),
            None => Self::from_json(text),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Config(
                "name must be nonempty and free of path separators".into(),
            ));
        }
        if !(self.mesh.length > 0.0) || self.mesh.cells == 0 {
            return Err(CliError::Config(
                "mesh.length must be positive and mesh.cells >= 1".into(),
            ));
        }
        let t = self.time.final_time();
        if !(t > 0.0) {
            return Err(CliError::Config("time.final_time must be positive".into()));
        }
        self.time.build()?;
        if let Some(lt) = &self.limit_time {
            if lt.final_time() != t {
                return Err(CliError::Config(format!(
                    "limit_time.final_time ({}) differs from time.final_time ({t})",
                    lt.final_time()
                )));
            }
            lt.build()?;
        }
        let ks = self.k.values();
        if ks.is_empty() {
            return Err(CliError::Config("k sweep list is empty".into()));
        }
        for &k in &ks {
            self.kinetics.build(k)?;
        }
        self.initial.validate()?;
        if !(1..=fastreact::quadrature::MAX_GAUSS_ORDER).contains(&self.quadrature_order) {
            return Err(CliError::Config(format!(
                "quadrature_order must be in 1..={}",
                fastreact::quadrature::MAX_GAUSS_ORDER
            )));
        }
        self.solver.validate()?;
        let length = self.mesh.length;
        if self.output.translate_shifts.iter().any(|s| s.abs() > length) {
            return Err(CliError::Config("translate shift exceeds the domain length".into()));
        }
        if self.output.translate_lags.iter().any(|&l| !(l >= 0.0) || l > t) {
            return Err(CliError::Config("translate lag must lie in [0, final_time]".into()));
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> CliResult<Mesh> {
        Ok(Mesh::uniform_1d(self.mesh.length, self.mesh.cells)?)
    }

    /// A copy with a single `k`.
    pub fn with_k(&self, k: f64) -> Self {
        Self {
            k: KValues::Single(k),
            ..self.clone()
        }
    }
}
