//! Small dense linear algebra for the low-dimensional models in this crate.
//!
//! Matrices here are at most a few dozen rows (context dimension or stacked
//! arm blocks), so everything is plain row-major `Vec` storage with Cholesky
//! factorization for symmetric positive definite solves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, S::one())
    }

    /// `scale * I`.
    pub fn scaled_identity(n: usize, scale: S) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = scale;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] += v;
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![S::zero(); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = dot(row, x);
        }
        out
    }

    /// `self += scale * x x^T` (rank-1 symmetric update).
    pub fn add_outer(&mut self, x: &[S], scale: S) {
        debug_assert_eq!(self.rows, self.cols);
        debug_assert_eq!(x.len(), self.rows);
        for i in 0..self.rows {
            let si = scale * x[i];
            for j in 0..self.cols {
                self.data[i * self.cols + j] += si * x[j];
            }
        }
    }

    pub fn add_scaled_identity(&mut self, scale: S) {
        debug_assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self.data[i * self.cols + i] += scale;
        }
    }

    /// Extracts the square block starting at `(r0, c0)` with side `n`.
    pub fn block(&self, r0: usize, c0: usize, n: usize) -> Mat<S> {
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(r0 + i, c0 + j));
            }
        }
        out
    }

    /// Averages the matrix with its transpose in place.
    pub fn symmetrize(&mut self) {
        debug_assert_eq!(self.rows, self.cols);
        let half = S::cast(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = half * (self.get(i, j) + self.get(j, i));
                self.set(i, j, m);
                self.set(j, i, m);
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Mat<S>) -> S {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(S::zero(), S::max)
    }

    /// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Cholesky<S>> {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if s <= S::zero() || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l.set(i, j, s.sqrt());
                } else {
                    l.set(i, j, s / l.get(j, j));
                }
            }
        }
        Ok(Cholesky { l })
    }
}

/// Cholesky factorization `A = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky<S> {
    l: Mat<S>,
}

impl<S: Scalar> Cholesky<S> {
    pub fn dim(&self) -> usize {
        self.l.rows
    }

    /// Entry `(i, j)` of the lower factor `L`.
    pub fn lower(&self, i: usize, j: usize) -> S {
        self.l.get(i, j)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let y = self.solve_lower(b);
        self.solve_upper(&y)
    }

    /// Solves `L y = b` (forward substitution).
    pub fn solve_lower(&self, b: &[S]) -> Vec<S> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut y = vec![S::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s = s - self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        y
    }

    /// Solves `L^T x = z` (back substitution).
    pub fn solve_upper(&self, z: &[S]) -> Vec<S> {
        let n = self.dim();
        debug_assert_eq!(z.len(), n);
        let mut x = vec![S::zero(); n];
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s = s - self.l.get(k, i) * x[k];
            }
            x[i] = s / self.l.get(i, i);
        }
        x
    }

    /// `A^{-1}` assembled column by column.
    pub fn inverse(&self) -> Mat<S> {
        let n = self.dim();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e[j] = S::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
            e[j] = S::zero();
        }
        inv
    }

    /// `x^T A^{-1} x`, clamped at zero against roundoff.
    pub fn inv_quad_form(&self, x: &[S]) -> S {
        let y = self.solve_lower(x);
        dot(&y, &y).max(S::zero())
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// `y += scale * x`.
pub fn axpy<S: Scalar>(y: &mut [S], x: &[S], scale: S) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += scale * *xi;
    }
}

pub fn all_finite<S: Scalar>(a: &[S]) -> bool {
    a.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_solve_recovers_known_solution() {
        // A = [[4,2],[2,3]], x = (1, -1) => b = (2, -1)
        let a = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let chol = a.cholesky().unwrap();
        let x = chol.solve(&[2.0, -1.0]);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_matches_direct_2x2_formula() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let inv = a.cholesky().unwrap().inverse();
        // det = 3; inverse = [[2,-1],[-1,2]]/3
        assert_relative_eq!(inv.get(0, 0), 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(inv.get(0, 1), -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(inv.get(1, 1), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn inv_quad_form_matches_solve() {
        let mut a = Mat::scaled_identity(3, 2.0);
        a.add_outer(&[1.0, 0.5, -0.5], 1.0);
        let chol = a.cholesky().unwrap();
        let x = [0.3, -1.0, 0.7];
        let direct = dot(&x, &chol.solve(&x));
        assert_relative_eq!(chol.inv_quad_form(&x), direct, epsilon = 1e-12);
    }

    #[test]
    fn works_in_f32_too() {
        let a = Mat::<f32>::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let x = a.cholesky().unwrap().solve(&[2.0, -1.0]);
        assert!((x[0] - 1.0).abs() < 1e-5);
    }
}
