use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CoefDictionary, Dictionary};
use crate::error::{Error, Result};
use crate::kernel::knorm;
use crate::linalg::{col, col_mut, dot, norm};

/// Self-similarity below which a training column cannot seed an atom.
const MIN_SELF_SIMILARITY: f64 = 1e-14;

/// Per-class generator: one ChaCha8 stream per class under a shared seed.
pub fn class_rng(seed: u64, class: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class as u64);
    rng
}

/// Draws up to `n` distinct usable column indices out of `total`, in random
/// order. Linear and kernel initializations share this draw so that equal
/// seeds pick the same training columns.
fn draw_columns<R, F>(rng: &mut R, total: usize, n: usize, usable: F) -> Result<Vec<usize>>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> bool,
{
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(rng);
    let mut picked = Vec::with_capacity(n.min(total));
    let mut failures = 0usize;
    for idx in order {
        if picked.len() == n {
            break;
        }
        if usable(idx) {
            picked.push(idx);
        } else {
            failures += 1;
            if failures > 10 * n {
                return Err(Error::InitFailed(failures));
            }
        }
    }
    Ok(picked)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Atoms are distinct normalized training columns; when fewer usable columns
/// than atoms exist the remainder are normalized Gaussian vectors.
pub fn init_dictionary<R: Rng + ?Sized>(y: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<Dictionary> {
    let m = y.nrows();
    if m == 0 || n == 0 {
        return Err(Error::InvalidConfig("dictionary needs m >= 1 and n >= 1".into()));
    }
    let picked = draw_columns(rng, y.ncols(), n, |l| dot(col(y, l), col(y, l)) > MIN_SELF_SIMILARITY)?;
    let mut atoms = DMatrix::<f64>::zeros(m, n);
    for (j, &l) in picked.iter().enumerate() {
        let src = col(y, l);
        let s = norm(src);
        for (dst, v) in col_mut(&mut atoms, j).iter_mut().zip(src) {
            *dst = v / s;
        }
    }
    for j in picked.len()..n {
        let mut tries = 0;
        loop {
            let g = gaussian(rng, m);
            let s = norm(&g);
            if s > 1e-12 {
                for (dst, v) in col_mut(&mut atoms, j).iter_mut().zip(&g) {
                    *dst = v / s;
                }
                break;
            }
            tries += 1;
            if tries > 10 * n {
                return Err(Error::InitFailed(tries));
            }
        }
    }
    Ok(Dictionary::from_raw(atoms))
}

/// Kernel analogue of [`init_dictionary`]: one-hot coefficient atoms
/// `e_p / sqrt(K_pp)`, i.e. normalized feature-space images of training
/// signals. Atoms beyond the number of usable signals get Gaussian
/// coefficients scaled to unit kernel norm.
pub fn init_coef_dictionary<R: Rng + ?Sized>(
    n_signals: usize,
    n: usize,
    gram: &DMatrix<f64>,
    rng: &mut R,
) -> Result<CoefDictionary> {
    if n_signals == 0 || n == 0 {
        return Err(Error::InvalidConfig("coefficient dictionary needs N >= 1 and n >= 1".into()));
    }
    if gram.nrows() != n_signals || gram.ncols() != n_signals {
        return Err(Error::DimensionMismatch {
            context: "class gram size",
            expected: n_signals,
            found: gram.nrows(),
        });
    }
    let picked = draw_columns(rng, n_signals, n, |l| gram[(l, l)] > MIN_SELF_SIMILARITY)?;
    let mut coefs = DMatrix::<f64>::zeros(n_signals, n);
    for (j, &l) in picked.iter().enumerate() {
        coefs[(l, j)] = 1.0 / libm::sqrt(gram[(l, l)]);
    }
    for j in picked.len()..n {
        let mut tries = 0;
        loop {
            let g = gaussian(rng, n_signals);
            let s = knorm(&g, gram);
            if s > 1e-12 {
                for (dst, v) in col_mut(&mut coefs, j).iter_mut().zip(&g) {
                    *dst = v / s;
                }
                break;
            }
            tries += 1;
            if tries > 10 * n {
                return Err(Error::InitFailed(tries));
            }
        }
    }
    Ok(CoefDictionary::from_raw(coefs))
}
