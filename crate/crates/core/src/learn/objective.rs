use nalgebra::DMatrix;

use super::train::ClassGrams;
use super::{CoefDictionary, Dictionary};
use crate::coding::SparseCodeMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot, frobenius_sq};

fn same_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// `sum_i ||Y_i - D_i X_i||_F^2 + gamma * sum_i sum_{l != i} ||D_i^T D_l||_F^2`
pub fn objective_idl(
    classes: &[DMatrix<f64>],
    dicts: &[Dictionary],
    codes: &[SparseCodeMatrix],
    gamma: f64,
) -> Result<f64> {
    same_len("objective dictionaries", classes.len(), dicts.len())?;
    same_len("objective codes", classes.len(), codes.len())?;
    let mut rec = 0.0;
    for ((y, d), x) in classes.iter().zip(dicts).zip(codes) {
        same_len("objective signal dimension", y.nrows(), d.dim())?;
        same_len("objective code rows", d.n_atoms(), x.n_atoms())?;
        same_len("objective code columns", y.ncols(), x.n_signals())?;
        rec += frobenius_sq(&(y - d.atoms() * x.as_matrix()));
    }
    let mut pen = 0.0;
    if gamma != 0.0 {
        for (i, di) in dicts.iter().enumerate() {
            for (l, dl) in dicts.iter().enumerate() {
                if l != i {
                    pen += frobenius_sq(&di.atoms().tr_mul(dl.atoms()));
                }
            }
        }
    }
    Ok(rec + gamma * pen)
}

/// Kernel objective: `sum_i tr(E_i^T K_ii E_i)` with `E_i = I - A_i X_i`, plus
/// `gamma * sum_i sum_{l != i} ||A_i^T K_li A_l||_F^2`.
pub fn objective_ikdl(
    grams: &ClassGrams,
    coefs: &[CoefDictionary],
    codes: &[SparseCodeMatrix],
    gamma: f64,
) -> Result<f64> {
    let c = grams.n_classes();
    same_len("objective dictionaries", c, coefs.len())?;
    same_len("objective codes", c, codes.len())?;
    let mut rec = 0.0;
    for (i, (a, x)) in coefs.iter().zip(codes).enumerate() {
        let n_i = grams.class_len(i);
        same_len("objective coefficient rows", n_i, a.n_signals())?;
        same_len("objective code rows", a.n_atoms(), x.n_atoms())?;
        same_len("objective code columns", n_i, x.n_signals())?;
        let e = DMatrix::<f64>::identity(n_i, n_i) - a.coefs() * x.as_matrix();
        let ke = grams.class_gram(i) * &e;
        rec += dot(e.as_slice(), ke.as_slice());
    }
    let mut pen = 0.0;
    if gamma != 0.0 {
        for (i, ai) in coefs.iter().enumerate() {
            for (l, al) in coefs.iter().enumerate() {
                if l != i {
                    let k_li = grams.block(i, l);
                    pen += frobenius_sq(&(ai.coefs().tr_mul(&k_li) * al.coefs()));
                }
            }
        }
    }
    Ok(rec + gamma * pen)
}
