//! Fixed-order Gauss-Legendre rules and adaptive Simpson integration.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]` for orders 1 to 5.
fn gauss_legendre(order: usize) -> Option<(&'static [f64], &'static [f64])> {
    const N1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const N2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const N3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    const N4: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W4: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    const N5: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W5: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    match order {
        1 => Some((&N1, &W1)),
        2 => Some((&N2, &W2)),
        3 => Some((&N3, &W3)),
        4 => Some((&N4, &W4)),
        5 => Some((&N5, &W5)),
        _ => None,
    }
}

pub const MAX_GAUSS_ORDER: usize = 5;

/// Mean value of `f` over `[lo, hi]` by an `order`-point Gauss-Legendre rule.
/// Order 1 is the midpoint rule.
pub fn interval_mean<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, order: usize) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(order).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "quadrature order must be in 1..={MAX_GAUSS_ORDER} (got {order})"
        ))
    })?;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let sum: f64 = nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum();
    Ok(0.5 * sum)
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` to absolute tolerance
/// `tol`. `lo > hi` yields the negated integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    if lo == hi {
        return 0.0;
    }
    if lo > hi {
        return -adaptive_simpson(f, hi, lo, tol);
    }
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, lo, hi, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for order in 1..=MAX_GAUSS_ORDER {
            let deg = 2 * order - 1;
            let mean = interval_mean(|x| x.powi(deg as i32), 0.0, 2.0, order).unwrap();
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0) / 2.0;
            assert!((mean - exact).abs() < 1e-12 * exact, "order {order}");
        }
        assert!(interval_mean(|x| x, 0.0, 1.0, 0).is_err());
        assert!(interval_mean(|x| x, 0.0, 1.0, 6).is_err());
    }

    #[test]
    fn simpson_on_smooth_integrand() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(&|x: f64| x.sin(), std::f64::consts::PI, 0.0, 1e-12);
        assert!((v + 2.0).abs() < 1e-11);
        assert_eq!(adaptive_simpson(&|x: f64| x, 1.0, 1.0, 1e-12), 0.0);
    }
}
