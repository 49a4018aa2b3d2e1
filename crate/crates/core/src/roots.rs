//! Safeguarded Newton iteration for increasing scalar maps.

use crate::error::{Error, Result};

const MAX_ITER: usize = 300;

/// Finds `x` in `[lo, hi]` with `f(x) = 0` for a nondecreasing `f` that
/// changes sign on the bracket. `f` returns the value and the derivative.
///
/// Newton steps that leave the current bracket (or are not finite) are
/// replaced by bisection. Iterates until the bracket or the Newton update is
/// at round-off level, then checks `|f(x)| <= ftol`.
pub fn solve_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    if flo >= 0.0 {
        return finish(lo, flo, ftol, lo, hi);
    }
    let (fhi, _) = f(hi);
    if fhi <= 0.0 {
        return finish(hi, fhi, ftol, lo, hi);
    }
    let mut x = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, x);
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx.abs() < best.0 {
            best = (fx.abs(), x);
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if dfx.is_finite() && dfx > 0.0 {
            x - fx / dfx
        } else {
            f64::NAN
        };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = next.abs().max(f64::MIN_POSITIVE);
        if (next - x).abs() <= 2.0 * f64::EPSILON * scale || hi - lo <= 2.0 * f64::EPSILON * scale {
            let (fn_, _) = f(next);
            if fn_.abs() < best.0 {
                best = (fn_.abs(), next);
            }
            break;
        }
        x = next;
    }
    finish(best.1, best.0, ftol, lo, hi)
}

fn finish(x: f64, fx: f64, ftol: f64, lo: f64, hi: f64) -> Result<f64> {
    if fx.abs() <= ftol {
        Ok(x)
    } else {
        Err(Error::Inversion {
            target: x,
            lo,
            hi,
            residual: fx.abs(),
        })
    }
}
