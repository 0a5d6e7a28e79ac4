//! Atom-by-atom dictionary sweeps.
//!
//! Each sweep keeps the representation error in memory and only touches the
//! columns `I_j` of the signals whose codes use atom `j`:
//!
//! 1. `F = E_I + d_j x^T` (error without atom `j`)
//! 2. atom update (linear or kernel power step), then normalization
//! 3. representation update, according to [`UpdateMode`]
//! 4. `E_I = F - d_j x^T`
//!
//! Atoms nobody uses are skipped and reported; the training loops hand them to
//! [`replace_unused_atoms`] / [`replace_unused_coef_atoms`].

use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::exact::{kernel_atom_step, linear_atom_step};
use super::{orient, CoefDictionary, Dictionary, UpdateMode};
use crate::coding::SparseCodeMatrix;
use crate::error::{Error, Result};
use crate::linalg::{col, col_mut, dot, norm};

/// Post-normalization norm below which an updated atom is considered lost.
const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Representation error after the sweep: `Y - D X`, or `I - A X` for the
    /// kernel sweep.
    pub error: DMatrix<f64>,
    /// Atoms left untouched because no code used them.
    pub skipped: Vec<usize>,
    /// Atoms whose update collapsed and were re-seeded from the
    /// worst-represented signal.
    pub degenerate: usize,
}

fn mismatch(context: &'static str, expected: usize, found: usize) -> Error {
    Error::DimensionMismatch {
        context,
        expected,
        found,
    }
}

/// Index of the largest value, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Linear incoherent AK-SVD sweep over every atom of `dict`.
///
/// `complement` holds the other classes' dictionaries side by side
/// (`m x sum_l n_l`, possibly with zero columns).
pub fn idl_atom_sweep(
    y: &DMatrix<f64>,
    dict: &mut Dictionary,
    complement: &DMatrix<f64>,
    codes: &mut SparseCodeMatrix,
    gamma: f64,
    mode: UpdateMode,
) -> Result<SweepReport> {
    let (m, n) = (dict.dim(), dict.n_atoms());
    if y.nrows() != m {
        return Err(mismatch("sweep signal dimension", m, y.nrows()));
    }
    if codes.n_atoms() != n {
        return Err(mismatch("sweep code rows", n, codes.n_atoms()));
    }
    if codes.n_signals() != y.ncols() {
        return Err(mismatch("sweep code columns", y.ncols(), codes.n_signals()));
    }
    if complement.ncols() > 0 && complement.nrows() != m {
        return Err(mismatch("complement dimension", m, complement.nrows()));
    }

    let mut error = y - dict.atoms() * codes.as_matrix();
    let mut report = SweepReport {
        error: DMatrix::zeros(0, 0),
        skipped: Vec::new(),
        degenerate: 0,
    };

    for j in 0..n {
        let support = codes.row_support(j);
        if support.is_empty() {
            report.skipped.push(j);
            continue;
        }
        let x_old: Vec<f64> = support.iter().map(|&l| codes.get(j, l)).collect();
        let d_old: Vec<f64> = col(dict.atoms(), j).to_vec();

        let mut f = DMatrix::<f64>::zeros(m, support.len());
        for (c, &l) in support.iter().enumerate() {
            let xc = x_old[c];
            for ((dst, e), d) in col_mut(&mut f, c).iter_mut().zip(col(&error, l)).zip(&d_old) {
                *dst = e + xc * d;
            }
        }

        let mut atom = linear_atom_step(&f, &x_old, &d_old, gamma, complement);
        let nrm = atom.norm();
        if nrm >= DEGENERATE_NORM {
            atom.unscale_mut(nrm);
        } else {
            report.degenerate += 1;
            let worst = argmax((0..error.ncols()).map(|l| dot(col(&error, l), col(&error, l))))
                .unwrap_or(0);
            let src = col(y, worst);
            let s = norm(src);
            if s > 0.0 {
                atom.copy_from_slice(src);
                atom.unscale_mut(s);
            } else {
                atom.copy_from_slice(&d_old);
            }
        }

        let mut x_new: Vec<f64> = match mode {
            UpdateMode::Aksvd => (0..support.len()).map(|c| dot(col(&f, c), atom.as_slice())).collect(),
            UpdateMode::Uaksvd => support
                .iter()
                .zip(&x_old)
                .map(|(&l, xo)| dot(col(&error, l), atom.as_slice()) + xo)
                .collect(),
        };
        orient(atom.as_mut_slice(), &mut x_new);

        for (c, &l) in support.iter().enumerate() {
            let xc = x_new[c];
            for ((dst, fv), d) in col_mut(&mut error, l).iter_mut().zip(col(&f, c)).zip(atom.iter()) {
                *dst = fv - xc * d;
            }
            codes.set(j, l, xc);
        }
        col_mut(dict.atoms_mut(), j).copy_from_slice(atom.as_slice());
    }

    report.error = error;
    Ok(report)
}

/// Kernel incoherent sweep over every coefficient atom.
///
/// `gram` is the class Gram `K_ii` (`N x N`) and `khat` the stacked
/// `A_l^T K_il` blocks of the other classes (`sum_l n_l x N`).
pub fn ikdl_atom_sweep(
    gram: &DMatrix<f64>,
    coefs: &mut CoefDictionary,
    khat: &DMatrix<f64>,
    codes: &mut SparseCodeMatrix,
    gamma: f64,
    mode: UpdateMode,
) -> Result<SweepReport> {
    let (big_n, n) = (coefs.n_signals(), coefs.n_atoms());
    if gram.nrows() != big_n || gram.ncols() != big_n {
        return Err(mismatch("sweep gram size", big_n, gram.nrows()));
    }
    if codes.n_atoms() != n {
        return Err(mismatch("sweep code rows", n, codes.n_atoms()));
    }
    if codes.n_signals() != big_n {
        return Err(mismatch("sweep code columns", big_n, codes.n_signals()));
    }
    if khat.nrows() > 0 && khat.ncols() != big_n {
        return Err(mismatch("kernel complement columns", big_n, khat.ncols()));
    }

    let mut error = DMatrix::<f64>::identity(big_n, big_n) - coefs.coefs() * codes.as_matrix();
    let mut report = SweepReport {
        error: DMatrix::zeros(0, 0),
        skipped: Vec::new(),
        degenerate: 0,
    };

    for j in 0..n {
        let support = codes.row_support(j);
        if support.is_empty() {
            report.skipped.push(j);
            continue;
        }
        let x_old: Vec<f64> = support.iter().map(|&l| codes.get(j, l)).collect();
        let a_old: Vec<f64> = col(coefs.coefs(), j).to_vec();

        let mut f = DMatrix::<f64>::zeros(big_n, support.len());
        for (c, &l) in support.iter().enumerate() {
            let xc = x_old[c];
            for ((dst, e), a) in col_mut(&mut f, c).iter_mut().zip(col(&error, l)).zip(&a_old) {
                *dst = e + xc * a;
            }
        }

        let mut atom = kernel_atom_step(gram, &f, &x_old, &a_old, gamma, khat);
        let mut k_atom = gram * &atom;
        let nrm = libm::sqrt(atom.dot(&k_atom).max(0.0));
        if nrm >= DEGENERATE_NORM {
            atom.unscale_mut(nrm);
            k_atom.unscale_mut(nrm);
        } else {
            report.degenerate += 1;
            let ke = gram * &error;
            let worst = argmax((0..big_n).map(|l| dot(col(&error, l), col(&ke, l)))).unwrap_or(0);
            atom.fill(0.0);
            if gram[(worst, worst)] > 1e-14 {
                atom[worst] = 1.0 / libm::sqrt(gram[(worst, worst)]);
            } else {
                atom.copy_from_slice(&a_old);
            }
            k_atom = gram * &atom;
        }

        let mut x_new: Vec<f64> = match mode {
            UpdateMode::Aksvd => (0..support.len()).map(|c| dot(col(&f, c), k_atom.as_slice())).collect(),
            UpdateMode::Uaksvd => support
                .iter()
                .zip(&x_old)
                .map(|(&l, xo)| dot(col(&error, l), k_atom.as_slice()) + xo)
                .collect(),
        };
        orient(atom.as_mut_slice(), &mut x_new);

        for (c, &l) in support.iter().enumerate() {
            let xc = x_new[c];
            for ((dst, fv), a) in col_mut(&mut error, l).iter_mut().zip(col(&f, c)).zip(atom.iter()) {
                *dst = fv - xc * a;
            }
            codes.set(j, l, xc);
        }
        col_mut(coefs.coefs_mut(), j).copy_from_slice(atom.as_slice());
    }

    report.error = error;
    Ok(report)
}

fn unused_atoms(codes: &SparseCodeMatrix) -> Vec<usize> {
    (0..codes.n_atoms())
        .filter(|&j| (0..codes.n_signals()).all(|l| codes.get(j, l) == 0.0))
        .collect()
}

/// Signals ordered by decreasing residual, lowest index first on ties.
fn by_residual(residuals: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..residuals.len()).collect();
    order.sort_by(|&a, &b| residuals[b].total_cmp(&residuals[a]).then(a.cmp(&b)));
    order
}

/// Re-seeds every atom without users with a distinct normalized training
/// signal, worst-represented signals first. Returns `(atom, signal)` pairs.
/// `error` must be the current `Y - D X`; it is unaffected because the
/// replaced atoms have all-zero code rows.
pub fn replace_unused_atoms(
    y: &DMatrix<f64>,
    dict: &mut Dictionary,
    codes: &SparseCodeMatrix,
    error: &DMatrix<f64>,
) -> Vec<(usize, usize)> {
    let unused = unused_atoms(codes);
    if unused.is_empty() {
        return Vec::new();
    }
    let residuals: Vec<f64> = (0..error.ncols()).map(|l| dot(col(error, l), col(error, l))).collect();
    let candidates = by_residual(&residuals)
        .into_iter()
        .filter(|&l| dot(col(y, l), col(y, l)) > 1e-14);
    let mut replaced = Vec::new();
    for (j, l) in unused.into_iter().zip(candidates) {
        let src = col(y, l);
        let s = norm(src);
        for (dst, v) in col_mut(dict.atoms_mut(), j).iter_mut().zip(src) {
            *dst = v / s;
        }
        replaced.push((j, l));
    }
    replaced
}

/// Kernel counterpart of [`replace_unused_atoms`]: residual norms are
/// `e_l^T K e_l` and replacements are one-hot atoms `e_l / sqrt(K_ll)`.
pub fn replace_unused_coef_atoms(
    gram: &DMatrix<f64>,
    coefs: &mut CoefDictionary,
    codes: &SparseCodeMatrix,
    error: &DMatrix<f64>,
) -> Vec<(usize, usize)> {
    let unused = unused_atoms(codes);
    if unused.is_empty() {
        return Vec::new();
    }
    let ke = gram * error;
    let residuals: Vec<f64> = (0..error.ncols()).map(|l| dot(col(error, l), col(&ke, l))).collect();
    let candidates = by_residual(&residuals)
        .into_iter()
        .filter(|&l| gram[(l, l)] > 1e-14);
    let mut replaced = Vec::new();
    for (j, l) in unused.into_iter().zip(candidates) {
        let c = col_mut(coefs.coefs_mut(), j);
        c.fill(0.0);
        c[l] = 1.0 / libm::sqrt(gram[(l, l)]);
        replaced.push((j, l));
    }
    replaced
}
