//! Sparse Jacobian storage and the linear solvers used inside Newton.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear solver used for the Newton correction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LinearSolver {
    /// LU with partial pivoting on the dense matrix.
    DenseDirect,
    /// Banded LU exploiting the sparsity profile.
    #[default]
    SparseDirect,
    /// Jacobi-preconditioned BiCGSTAB.
    Bicgstab { tol: f64, max_iter: usize },
}

/// Square matrix in compressed sparse row format.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, a)| a * x[j]).sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(j, _)| j == i).map_or(0.0, |(_, a)| a))
            .collect()
    }

    /// `(lower, upper)` bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                m[(i, j)] += a;
            }
        }
        m
    }
}

/// Solves `A x = b`.
pub fn solve(a: &CsrMatrix, b: &[f64], solver: LinearSolver) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::Mismatch(format!(
            "right-hand side has {} entries, matrix is {}x{}",
            b.len(),
            a.dim(),
            a.dim()
        )));
    }
    match solver {
        LinearSolver::DenseDirect => solve_dense(a, b),
        LinearSolver::SparseDirect => match solve_banded(a, b) {
            Ok(x) => Ok(x),
            Err(_) => solve_dense(a, b),
        },
        LinearSolver::Bicgstab { tol, max_iter } => bicgstab(a, b, tol, max_iter),
    }
}

fn solve_dense(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.to_dense().lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::LinearSolve("singular matrix in dense LU".into()))
}

/// Banded Gaussian elimination without pivoting. The Newton matrices of the
/// scheme are column diagonally dominant after row scaling, for which
/// elimination without pivoting is stable. A vanishing pivot is reported as an
/// error so the caller can fall back to a pivoted dense solve.
fn solve_banded(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    let (kl, ku) = a.bandwidths();
    let width = kl + ku + 1;
    // band[i][j - i + kl] holds A[i][j]
    let mut band = vec![0.0; n * width];
    for i in 0..n {
        for (j, v) in a.row(i) {
            band[i * width + (j + kl - i)] += v;
        }
    }
    let idx = |i: usize, j: usize| i * width + (j + kl - i);
    let mut x = b.to_vec();
    let scale = band.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        let pivot = band[idx(k, k)];
        if !(pivot.abs() > 1e-300_f64.max(f64::EPSILON * 1e-6 * scale)) {
            return Err(Error::LinearSolve(format!("zero pivot at row {k}")));
        }
        for i in (k + 1)..n.min(k + kl + 1) {
            let factor = band[idx(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in k..n.min(k + ku + 1) {
                band[idx(i, j)] -= factor * band[idx(k, j)];
            }
            x[i] -= factor * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n.min(k + ku + 1) {
            s -= band[idx(k, j)] * x[j];
        }
        x[k] = s / band[idx(k, k)];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("non-finite banded solution".into()));
    }
    Ok(x)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn bicgstab(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = a.mul_vec(&p_hat);
        alpha = rho_new / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if dot(&s, &s).sqrt() <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(x);
        }
        let s_hat = precond(&s);
        let t = a.mul_vec(&s_hat);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(x);
        }
        if !omega.is_finite() || omega == 0.0 {
            break;
        }
    }
    Err(Error::LinearSolve(format!(
        "BiCGSTAB did not reach relative residual {tol:e} in {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.1));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 2 < n {
                t.push((i, i + 2, -0.5));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_summed_and_sorted() {
        let m = CsrMatrix::from_triplets(2, vec![(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (0, 0, 5.0)]);
        assert_eq!(m.row(0).collect::<Vec<_>>(), vec![(0, 5.0), (1, 2.0)]);
        assert_eq!(m.row(1).collect::<Vec<_>>(), vec![(0, 4.0)]);
        assert_eq!(m.bandwidths(), (1, 1));
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![7.0, 4.0]);
    }

    #[test]
    fn all_solvers_agree() {
        let a = tridiagonal(40);
        let x_true: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        for solver in [
            LinearSolver::DenseDirect,
            LinearSolver::SparseDirect,
            LinearSolver::Bicgstab {
                tol: 1e-14,
                max_iter: 500,
            },
        ] {
            let x = solve(&a, &b, solver).unwrap();
            let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{solver:?}: {err}");
        }
    }

    #[test]
    fn banded_falls_back_on_zero_pivot() {
        // needs pivoting: [[0, 1], [1, 0]]
        let a = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        let x = solve(&a, &[2.0, 3.0], LinearSolver::SparseDirect).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let a = tridiagonal(3);
        assert!(matches!(
            solve(&a, &[1.0], LinearSolver::DenseDirect),
            Err(Error::Mismatch(_))
        ));
    }
}
