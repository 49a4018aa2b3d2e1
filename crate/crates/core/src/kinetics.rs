//! Rate laws of the reversible reaction and the maps of the
//! instantaneous-reaction limit.
//!
//! For strictly increasing rates `r_A`, `r_B` with `r_A(0) = r_B(0) = 0`:
//!
//! * `eta = r_B^{-1} o r_A` maps `u` to its chemically equilibrated partner `v`,
//! * `H(s) = s/alpha + eta(s)/beta` maps `u` to the conserved quantity `w`,
//! * `phi = (a/alpha id + b/beta eta) o H^{-1}` is the flux potential of the
//!   limit problem `w_t = Laplace phi(w)`.
//!
//! All inversions go through [`solve_increasing`], a safeguarded Newton
//! iteration, so any monotone rate law can be used. Closed forms for the
//! dimerisation example live in [`Dimerisation`] and are only used as an
//! independent cross-check.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::roots::solve_increasing;

/// Mixed absolute/relative tolerance of the scalar inversions.
pub const TOL_INV: f64 = 1e-12;

/// A strictly increasing rate function with `r(0) = 0`.
///
/// Implementations should extend the rate to negative arguments as an
/// increasing function (e.g. odd extension); Newton iterates of the scheme
/// may visit small negative values before converging.
pub trait RateFunction: Send + Sync + fmt::Debug {
    fn value(&self, s: f64) -> f64;

    fn derivative(&self, s: f64) -> f64;

    /// Upper end of the interval on which the rate is defined.
    fn domain_bound(&self) -> f64 {
        f64::INFINITY
    }

    /// Solves `r(s) = y` for `s >= 0`.
    fn inverse(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::Domain(format!("cannot invert rate at negative value {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let bound = self.domain_bound();
        let mut hi = 1.0_f64.min(bound);
        while self.value(hi) < y {
            if hi >= bound {
                return Err(Error::Domain(format!(
                    "rate value {y} lies outside the range of the rate on [0, {bound}]"
                )));
            }
            hi = (hi * 2.0).min(bound);
            if !hi.is_finite() {
                return Err(Error::Domain(format!("rate value {y} is unreachable")));
            }
        }
        solve_increasing(
            |s| (self.value(s) - y, self.derivative(s)),
            0.0,
            hi,
            TOL_INV * (1.0 + y.abs()),
        )
    }
}

/// `r(s) = coefficient * s^exponent` for `s >= 0`, extended oddly to `s < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0) || !(exponent > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "power law needs positive coefficient and exponent (got {coefficient}, {exponent})"
            )));
        }
        Ok(Self { coefficient, exponent })
    }
}

impl RateFunction for PowerLaw {
    fn value(&self, s: f64) -> f64 {
        if self.exponent == 1.0 {
            return self.coefficient * s;
        }
        if self.exponent == 2.0 {
            return self.coefficient * s * s.abs();
        }
        self.coefficient * s.signum() * s.abs().powf(self.exponent)
    }

    fn derivative(&self, s: f64) -> f64 {
        if self.exponent == 1.0 {
            return self.coefficient;
        }
        if self.exponent == 2.0 {
            return 2.0 * self.coefficient * s.abs();
        }
        self.coefficient * self.exponent * s.abs().powf(self.exponent - 1.0)
    }

    fn inverse(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::Domain(format!("cannot invert rate at negative value {y}")));
        }
        Ok(match self.exponent {
            1.0 => y / self.coefficient,
            2.0 => (y / self.coefficient).sqrt(),
            e => (y / self.coefficient).powf(1.0 / e),
        })
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A rate law given by a value/derivative pair of closures.
#[derive(Clone)]
pub struct FnRate {
    value: ScalarFn,
    derivative: ScalarFn,
    bound: f64,
}

impl FnRate {
    pub fn new<F, G>(value: F, derivative: G, domain_bound: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            bound: domain_bound,
        }
    }
}

impl fmt::Debug for FnRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnRate")
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl RateFunction for FnRate {
    fn value(&self, s: f64) -> f64 {
        (self.value)(s)
    }
    fn derivative(&self, s: f64) -> f64 {
        (self.derivative)(s)
    }
    fn domain_bound(&self) -> f64 {
        self.bound
    }
}

/// Stoichiometry, diffusivities and rate laws of `A <-> B` with kinetic
/// factor `k`.
#[derive(Debug, Clone)]
pub struct Kinetics {
    alpha: f64,
    beta: f64,
    /// Diffusion coefficient of `u` (m^2/s).
    a: f64,
    /// Diffusion coefficient of `v` (m^2/s).
    b: f64,
    k: f64,
    rate_a: Arc<dyn RateFunction>,
    rate_b: Arc<dyn RateFunction>,
}

impl Kinetics {
    pub fn new(
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
        k: f64,
        rate_a: Arc<dyn RateFunction>,
        rate_b: Arc<dyn RateFunction>,
    ) -> Result<Self> {
        for (name, val) in [("alpha", alpha), ("beta", beta), ("a", a), ("b", b)] {
            if !(val > 0.0) || !val.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite (got {val})"
                )));
            }
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kinetic factor k must be nonnegative (got {k})"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            a,
            b,
            k,
            rate_a,
            rate_b,
        })
    }

    /// `r_A = c_a s^p`, `r_B = c_b s^q`.
    #[allow(clippy::too_many_arguments)]
    pub fn power_law(
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
        k: f64,
        c_a: f64,
        p: f64,
        c_b: f64,
        q: f64,
    ) -> Result<Self> {
        Self::new(
            alpha,
            beta,
            a,
            b,
            k,
            Arc::new(PowerLaw::new(c_a, p)?),
            Arc::new(PowerLaw::new(c_b, q)?),
        )
    }

    /// Same kinetics with a different kinetic factor.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(
            self.alpha,
            self.beta,
            self.a,
            self.b,
            k,
            self.rate_a.clone(),
            self.rate_b.clone(),
        )
    }

    /// Same kinetics with different diffusion coefficients.
    pub fn with_diffusion(&self, a: f64, b: f64) -> Result<Self> {
        Self::new(
            self.alpha,
            self.beta,
            a,
            b,
            self.k,
            self.rate_a.clone(),
            self.rate_b.clone(),
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    /// `k * alpha`.
    pub fn alpha_hat(&self) -> f64 {
        self.k * self.alpha
    }
    /// `k * beta`.
    pub fn beta_hat(&self) -> f64 {
        self.k * self.beta
    }

    pub fn rate_a(&self) -> &dyn RateFunction {
        self.rate_a.as_ref()
    }
    pub fn rate_b(&self) -> &dyn RateFunction {
        self.rate_b.as_ref()
    }

    pub fn r_a(&self, u: f64) -> f64 {
        self.rate_a.value(u)
    }
    pub fn r_b(&self, v: f64) -> f64 {
        self.rate_b.value(v)
    }
    pub fn r_a_prime(&self, u: f64) -> f64 {
        self.rate_a.derivative(u)
    }
    pub fn r_b_prime(&self, v: f64) -> f64 {
        self.rate_b.derivative(v)
    }

    /// Conserved combination `u/alpha + v/beta`.
    pub fn conserved(&self, u: f64, v: f64) -> f64 {
        u / self.alpha + v / self.beta
    }

    /// `eta(u) = r_B^{-1}(r_A(u))`.
    pub fn eta(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("eta is defined for u >= 0 (got {u})")));
        }
        let y = self.r_a(u);
        let v = self.rate_b.inverse(y)?;
        let residual = (self.r_b(v) - y).abs();
        if residual > TOL_INV * (1.0 + y.abs()) {
            return Err(Error::Inversion {
                target: y,
                lo: 0.0,
                hi: v,
                residual,
            });
        }
        Ok(v)
    }

    /// `eta'(u) = r_A'(u) / r_B'(eta(u))`. May be `+inf` where `r_B'` vanishes.
    pub fn eta_derivative(&self, u: f64) -> Result<f64> {
        let v = self.eta(u)?;
        let num = self.r_a_prime(u);
        let den = self.r_b_prime(v);
        if num == 0.0 {
            return Ok(0.0);
        }
        Ok(num / den)
    }

    /// `H(u) = u/alpha + eta(u)/beta`.
    pub fn h(&self, u: f64) -> Result<f64> {
        Ok(u / self.alpha + self.eta(u)? / self.beta)
    }

    /// Solves `H(u) = w` for `u >= 0`.
    pub fn h_inverse(&self, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return Err(Error::Domain(format!("H^-1 is defined for w >= 0 (got {w})")));
        }
        if w == 0.0 {
            return Ok(0.0);
        }
        let mut failure = None;
        // H(u) >= u/alpha brackets the root in [0, alpha w].
        let root = solve_increasing(
            |u| match (self.eta(u), self.eta_derivative(u)) {
                (Ok(e), Ok(de)) => (u / self.alpha + e / self.beta - w, 1.0 / self.alpha + de / self.beta),
                (Err(err), _) | (_, Err(err)) => {
                    failure.get_or_insert(err);
                    (f64::NAN, f64::NAN)
                }
            },
            0.0,
            self.alpha * w,
            TOL_INV * (1.0 + w),
        );
        if let Some(err) = failure {
            return Err(err);
        }
        root
    }

    /// `v = eta(H^{-1}(w))`, the equilibrium `v` carrying conserved mass `w`.
    pub fn v_from_w(&self, w: f64) -> Result<f64> {
        self.eta(self.h_inverse(w)?)
    }

    /// Equilibrium pair `(u, v)` with `u/alpha + v/beta = w` and `r_A(u) = r_B(v)`.
    pub fn equilibrium_from_w(&self, w: f64) -> Result<(f64, f64)> {
        let u = self.h_inverse(w)?;
        Ok((u, self.eta(u)?))
    }

    /// Flux potential of the limit problem.
    pub fn phi(&self, w: f64) -> Result<f64> {
        let (u, v) = self.equilibrium_from_w(w)?;
        Ok(self.a / self.alpha * u + self.b / self.beta * v)
    }

    /// `phi'(w)` by the inverse-function rule:
    /// `(a/alpha + b/beta eta'(u)) / (1/alpha + eta'(u)/beta)` at `u = H^{-1}(w)`.
    pub fn phi_derivative(&self, w: f64) -> Result<f64> {
        let u = self.h_inverse(w)?;
        let de = self.eta_derivative(u)?;
        if de.is_infinite() {
            return Ok(self.b);
        }
        let d = (self.a / self.alpha + self.b / self.beta * de) / (1.0 / self.alpha + de / self.beta);
        if d.is_finite() {
            return Ok(d);
        }
        // finite-difference fallback
        let step = 1e-7 * (1.0 + w);
        let lo = (w - step).max(0.0);
        let hi = w + step;
        Ok((self.phi(hi)? - self.phi(lo)?) / (hi - lo))
    }

    /// Spot-checks the standing hypotheses on the rate laws: `r(0) = 0`,
    /// strict monotonicity on a log-spaced grid up to `upper`, range inclusion
    /// `r_A(s) <= sup r_B` on that grid, and boundedness of `s r'(s) / r(s)`
    /// as `s -> 0+`. Returns a description of every failed check.
    pub fn check_hypotheses(&self, upper: f64) -> Vec<String> {
        let mut problems = Vec::new();
        let grid: Vec<f64> = std::iter::once(0.0)
            .chain((0..=200).map(|i| 10f64.powf(-10.0 + i as f64 * (upper.log10() + 10.0) / 200.0)))
            .collect();
        for (name, rate) in [("r_A", &self.rate_a), ("r_B", &self.rate_b)] {
            let r0 = rate.value(0.0);
            if r0 != 0.0 {
                problems.push(format!("{name}(0) = {r0}, expected 0"));
            }
            for w in grid.windows(2) {
                if w[1] > rate.domain_bound() {
                    break;
                }
                if !(rate.value(w[1]) > rate.value(w[0])) {
                    problems.push(format!("{name} is not strictly increasing on [{}, {}]", w[0], w[1]));
                    break;
                }
            }
            let log_slopes: Vec<f64> = [1e-12, 1e-10, 1e-8, 1e-6]
                .iter()
                .map(|&s| s * rate.derivative(s) / rate.value(s))
                .collect();
            if log_slopes.iter().any(|x| !x.is_finite() || *x > 1e6) {
                problems.push(format!(
                    "{name}: s r'(s)/r(s) appears unbounded near 0 ({log_slopes:?})"
                ));
            }
        }
        for &s in grid.iter().skip(1) {
            if s > self.rate_a.domain_bound() {
                break;
            }
            if self.rate_b.inverse(self.r_a(s)).is_err() {
                problems.push(format!("r_A({s}) is outside the range of r_B"));
                break;
            }
        }
        problems
    }
}

/// The reversible dimerisation `2A <-> B`: `r_A = k1 u^2`, `r_B = k2 v`,
/// `alpha = 2`, `beta = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimerisation {
    pub k1: f64,
    pub k2: f64,
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

/// Maximum deviations of the printed closed forms from the maps computed by
/// inversion, over a sample of `w` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormDiscrepancy {
    pub samples: Vec<f64>,
    /// `max |h(w) - H^{-1}(w)|`.
    pub h_vs_h_inverse: f64,
    /// `max |g(h(w)) - eta(H^{-1}(w))|`.
    pub g_of_h_vs_v_from_w: f64,
    /// `max |g(h(w)) - phi(w)|`.
    pub g_of_h_vs_phi: f64,
    /// `max |g(H^{-1}(w)) - phi(w)|`.
    pub g_of_h_inverse_vs_phi: f64,
}

impl ClosedFormDiscrepancy {
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.h_vs_h_inverse <= tol && self.g_of_h_vs_v_from_w <= tol
    }
}

impl fmt::Display for ClosedFormDiscrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "closed-form cross-check over {} samples:", self.samples.len())?;
        writeln!(f, "  max |h(w) - H^-1(w)|          = {:.6e}", self.h_vs_h_inverse)?;
        writeln!(f, "  max |g(h(w)) - eta(H^-1(w))|  = {:.6e}", self.g_of_h_vs_v_from_w)?;
        writeln!(f, "  max |g(h(w)) - phi(w)|        = {:.6e}", self.g_of_h_vs_phi)?;
        write!(
            f,
            "  max |g(H^-1(w)) - phi(w)|     = {:.6e}",
            self.g_of_h_inverse_vs_phi
        )
    }
}

impl Dimerisation {
    pub const ALPHA: f64 = 2.0;
    pub const BETA: f64 = 1.0;

    /// Benzene solvent at 298 K: `k1 = 1.072e-4`, `k2 = 2.363e-6`,
    /// `a = 1.579e-9 m^2/s`, `b = 1.042e-9 m^2/s`, with `k = 1`.
    pub fn reference() -> Self {
        Self {
            k1: 1.072e-4,
            k2: 2.363e-6,
            a: 1.579e-9,
            b: 1.042e-9,
            k: 1.0,
        }
    }

    pub fn with_k(self, k: f64) -> Self {
        Self { k, ..self }
    }

    pub fn kinetics(&self) -> Result<Kinetics> {
        Kinetics::power_law(
            Self::ALPHA,
            Self::BETA,
            self.a,
            self.b,
            self.k,
            self.k1,
            2.0,
            self.k2,
            1.0,
        )
    }

    /// The printed closed form meant to invert `H`:
    /// `h(y) = 1/2 ( sqrt((alpha k1/(beta k2))^2 + 4 y k2/(beta k1)) - alpha k2/(beta k1) )`.
    pub fn h_closed_form(&self, y: f64) -> Result<f64> {
        let (al, be) = (Self::ALPHA, Self::BETA);
        let disc = (al * self.k1 / (be * self.k2)).powi(2) + y * 4.0 * self.k2 / (be * self.k1);
        if disc < 0.0 {
            return Err(Error::Domain(format!("negative discriminant {disc} at y = {y}")));
        }
        Ok(0.5 * (disc.sqrt() - al * self.k2 / (be * self.k1)))
    }

    /// The printed closed form `g(h) = h a/alpha + h^2 b k1/(beta k2)`.
    pub fn g_closed_form(&self, h: f64) -> f64 {
        h * self.a / Self::ALPHA + h * h * self.b * self.k1 / (Self::BETA * self.k2)
    }

    /// Positive root of `u/alpha + (k1/k2) u^2 / beta = w`.
    pub fn h_inverse_quadratic(&self, w: f64) -> f64 {
        let c2 = self.k1 / (self.k2 * Self::BETA);
        let c1 = 1.0 / Self::ALPHA;
        // numerically stable form of (-c1 + sqrt(c1^2 + 4 c2 w)) / (2 c2)
        2.0 * w / (c1 + (c1 * c1 + 4.0 * c2 * w).sqrt())
    }

    pub fn discrepancy_report(&self, samples: &[f64]) -> Result<ClosedFormDiscrepancy> {
        let kin = self.kinetics()?;
        let mut rep = ClosedFormDiscrepancy {
            samples: samples.to_vec(),
            h_vs_h_inverse: 0.0,
            g_of_h_vs_v_from_w: 0.0,
            g_of_h_vs_phi: 0.0,
            g_of_h_inverse_vs_phi: 0.0,
        };
        for &w in samples {
            let h = self.h_closed_form(w)?;
            let u = kin.h_inverse(w)?;
            let v = kin.eta(u)?;
            let phi = kin.a / kin.alpha * u + kin.b / kin.beta * v;
            let g_h = self.g_closed_form(h);
            rep.h_vs_h_inverse = rep.h_vs_h_inverse.max((h - u).abs());
            rep.g_of_h_vs_v_from_w = rep.g_of_h_vs_v_from_w.max((g_h - v).abs());
            rep.g_of_h_vs_phi = rep.g_of_h_vs_phi.max((g_h - phi).abs());
            rep.g_of_h_inverse_vs_phi = rep.g_of_h_inverse_vs_phi.max((self.g_closed_form(u) - phi).abs());
        }
        Ok(rep)
    }
}
