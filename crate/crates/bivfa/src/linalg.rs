//! Minimal dense linear algebra: row-major matrices, vector helpers, and a
//! deterministic power iteration for spectral norms.
//!
//! Everything here is desk scale (n up to a few hundred); no attempt is made
//! at cache blocking or sparsity.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must be `rows*cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Config(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            y[i] = dot(self.row(i), x);
        }
        y
    }

    /// `y = Aᵀ x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi != 0.0 {
                let row = self.row(i);
                for j in 0..self.cols {
                    y[j] += row[j] * xi;
                }
            }
        }
        y
    }

    /// Gram matrix `AᵀA`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..n {
                let ra = row[a];
                if ra != 0.0 {
                    for b in a..n {
                        g.data[a * n + b] += ra * row[b];
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g.data[a * n + b] = g.data[b * n + a];
            }
        }
        g
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Largest absolute asymmetry `max |A_ij − A_ji|` for square matrices.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(a: &[f64], alpha: f64, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + alpha * y).collect()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..y.len() {
        y[i] += alpha * x[i];
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s.sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Deterministic all-ones start vector; runs up to `max_iters` (200 by
/// convention here) or until the Rayleigh quotient settles to relative 1e-9.
pub fn power_iteration_sym(m: &Matrix, max_iters: usize) -> f64 {
    debug_assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0f64;
    for _ in 0..max_iters {
        let w = m.matvec(&v);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &w);
        for i in 0..n {
            v[i] = w[i] / nw;
        }
        if (next - lambda).abs() <= 1e-9 * next.abs().max(1e-300) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Smallest eigenvalue of a symmetric matrix, via power iteration on the
/// spectrally shifted matrix `λ_max I − M`.
pub fn min_eigenvalue_sym(m: &Matrix, max_iters: usize) -> f64 {
    let n = m.rows();
    if n == 0 {
        return 0.0;
    }
    // Shift by a certain upper bound on the spectral radius.
    let shift = power_iteration_sym(m, max_iters).abs() + norm_inf_matrix(m) + 1.0;
    let mut shifted = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { shift - m.get(i, j) } else { -m.get(i, j) };
            shifted.set(i, j, v);
        }
    }
    shift - power_iteration_sym(&shifted, max_iters)
}

fn norm_inf_matrix(m: &Matrix) -> f64 {
    (0..m.rows())
        .map(|i| norm1(m.row(i)))
        .fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose() {
        let a = Matrix::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        let t = a.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.get(2, 1), 6.0);
    }

    #[test]
    fn gram_matches_explicit_product() {
        let a = Matrix::from_row_major(3, 2, vec![1.0, 2.0, 0.0, 1.0, -1.0, 4.0]).unwrap();
        let g = a.gram();
        let at = a.transpose();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += at.get(i, k) * a.get(k, j);
                }
                assert!((g.get(i, j) - s).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn power_iteration_diagonal() {
        let mut m = Matrix::zeros(3, 3);
        m.set(0, 0, 0.5);
        m.set(1, 1, 2.5);
        m.set(2, 2, 1.0);
        let lam = power_iteration_sym(&m, 200);
        assert!((lam - 2.5).abs() < 1e-6 * 2.5);
        let lo = min_eigenvalue_sym(&m, 200);
        assert!((lo - 0.5).abs() < 1e-6);
    }

    #[test]
    fn power_iteration_zero_matrix() {
        let m = Matrix::zeros(4, 4);
        assert_eq!(power_iteration_sym(&m, 200), 0.0);
    }
}
