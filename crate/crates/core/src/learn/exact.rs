use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::solve_psd;

/// Unnormalized linear atom update `F x - 2 gamma Dbar Dbar^T d`.
pub fn linear_atom_step(
    f: &DMatrix<f64>,
    x: &[f64],
    atom: &[f64],
    gamma: f64,
    complement: &DMatrix<f64>,
) -> DVector<f64> {
    let mut out = f * DVector::from_column_slice(x);
    if gamma != 0.0 && complement.ncols() > 0 {
        let t = complement.tr_mul(&DVector::from_column_slice(atom));
        out.gemv(-2.0 * gamma, complement, &t, 1.0);
    }
    out
}

/// Unnormalized kernel atom update `K F x - 2 gamma Khat^T Khat a`: one
/// power-method step on `K F F^T K - 2 gamma Khat^T Khat` when `x = F^T K a`.
pub fn kernel_atom_step(
    k: &DMatrix<f64>,
    f: &DMatrix<f64>,
    x: &[f64],
    atom: &[f64],
    gamma: f64,
    khat: &DMatrix<f64>,
) -> DVector<f64> {
    let fx = f * DVector::from_column_slice(x);
    let mut out = k * fx;
    if gamma != 0.0 && khat.nrows() > 0 {
        let t = khat * DVector::from_column_slice(atom);
        out.gemv_tr(-2.0 * gamma, khat, &t, 1.0);
    }
    out
}

/// Exact minimizer of the per-atom kernel objective: solves
/// `(K ||x||^2 + 2 gamma Khat^T Khat) a = K F x`. Kept as a reference for the
/// power-step shortcut; the training loops never call it.
pub fn exact_atom_solve(
    k: &DMatrix<f64>,
    f: &DMatrix<f64>,
    x: &[f64],
    gamma: f64,
    khat: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let n = k.nrows();
    if k.ncols() != n || f.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "exact atom system",
            expected: n,
            found: f.nrows(),
        });
    }
    if f.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "exact atom representation",
            expected: f.ncols(),
            found: x.len(),
        });
    }
    if khat.nrows() > 0 && khat.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "exact atom complement",
            expected: n,
            found: khat.ncols(),
        });
    }
    let xv = DVector::from_column_slice(x);
    let mut system = k * xv.norm_squared();
    if gamma != 0.0 && khat.nrows() > 0 {
        system += khat.tr_mul(khat) * (2.0 * gamma);
    }
    let rhs = k * (f * xv);
    let sol: Vec<f64> = solve_psd(&system, rhs.as_slice())?;
    Ok(DVector::from_vec(sol))
}
