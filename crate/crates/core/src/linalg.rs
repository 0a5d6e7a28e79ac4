//! Small dense helpers on top of column-major `nalgebra` storage.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative pivot below which a new support atom counts as linearly dependent.
pub(crate) const PIVOT_TOL: f64 = 1e-10;

/// Column `j` of a column-major matrix as a contiguous slice.
#[inline]
pub fn col(m: &DMatrix<f64>, j: usize) -> &[f64] {
    let rows = m.nrows();
    &m.as_slice()[j * rows..(j + 1) * rows]
}

#[inline]
pub fn col_mut(m: &mut DMatrix<f64>, j: usize) -> &mut [f64] {
    let rows = m.nrows();
    &mut m.as_mut_slice()[j * rows..(j + 1) * rows]
}

/// Sequential left-to-right dot product; the summation order is fixed so
/// results do not depend on how callers are scheduled.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for (i, v) in col(m, j).iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub(crate) fn check_finite_vec(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(row) => Err(Error::NonFinite { row, col: 0 }),
        None => Ok(()),
    }
}

/// Diagonal jitter `1e-10 * trace(G) / n` for a symmetric PSD matrix.
pub fn psd_jitter(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows().max(1);
    1e-10 * g.trace() / n as f64
}

/// Frobenius norm squared with a fixed summation order.
pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    dot(m.as_slice(), m.as_slice())
}

/// Cholesky factor of a symmetric positive definite system, returned as the
/// lower triangle; `None` if a pivot is not strictly positive.
pub(crate) fn cholesky(g: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let n = g.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[(i, j)];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = libm::sqrt(s);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` for a lower-triangular `L`.
pub(crate) fn cholesky_solve(l: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Solves a symmetric PSD system, retrying once with [`psd_jitter`].
pub fn solve_psd(g: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let jitter = psd_jitter(g);
    let l = cholesky(g, 0.0)
        .or_else(|| (jitter > 0.0).then(|| cholesky(g, jitter)).flatten())
        .ok_or(Error::Singular)?;
    Ok(cholesky_solve(&l, b))
}

/// Growing lower-triangular Cholesky factor of the Gram matrix of a greedy
/// support. Rows are stored packed, row `i` holding `i + 1` entries.
#[derive(Debug, Clone)]
pub(crate) struct SupportFactor {
    rows: Vec<f64>,
    size: usize,
    jitter: f64,
}

impl SupportFactor {
    pub fn with_capacity(cap: usize) -> Self {
        SupportFactor {
            rows: Vec::with_capacity(cap * (cap + 1) / 2),
            size: 0,
            jitter: 0.0,
        }
    }

    pub fn jittered(&self) -> bool {
        self.jitter > 0.0
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.rows[i * (i + 1) / 2 + j]
    }

    /// Appends an atom given its inner products with the current support
    /// (`cross`) and with itself (`diag`). Returns `false`, leaving the factor
    /// untouched, when the atom is numerically inside the span of the support.
    pub fn push(&mut self, cross: &[f64], diag: f64) -> bool {
        debug_assert_eq!(cross.len(), self.size);
        let mut w = vec![0.0; self.size];
        for i in 0..self.size {
            let mut s = cross[i];
            for k in 0..i {
                s -= self.at(i, k) * w[k];
            }
            w[i] = s / self.at(i, i);
        }
        let d = diag + self.jitter;
        let pivot = d - dot(&w, &w);
        let threshold = if self.jittered() {
            0.5 * self.jitter
        } else {
            PIVOT_TOL * d.abs()
        };
        if !(pivot > threshold) || !pivot.is_finite() {
            return false;
        }
        self.rows.extend_from_slice(&w);
        self.rows.push(libm::sqrt(pivot));
        self.size += 1;
        true
    }

    /// Refactors `G + jitter * I` from scratch for a support of `size` atoms
    /// whose Gram entries are produced by `entry`. On failure the previous
    /// factor is kept.
    pub fn refactor<F>(&mut self, size: usize, jitter: f64, entry: F) -> bool
    where
        F: Fn(usize, usize) -> f64,
    {
        let mut g = DMatrix::<f64>::zeros(size, size);
        for i in 0..size {
            for j in 0..=i {
                let v = entry(i, j);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let Some(l) = cholesky(&g, jitter) else {
            return false;
        };
        if (0..size).any(|i| !(l[(i, i)] * l[(i, i)] > 0.5 * jitter)) {
            return false;
        }
        self.rows.clear();
        for i in 0..size {
            for j in 0..=i {
                self.rows.push(l[(i, j)]);
            }
        }
        self.size = size;
        self.jitter = jitter;
        true
    }

    /// Solves `(L L^T) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.size;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.at(i, k) * z[k];
            }
            z[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= self.at(k, i) * z[k];
            }
            z[i] = s / self.at(i, i);
        }
        z
    }
}
