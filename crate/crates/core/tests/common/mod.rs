#![allow(dead_code)]
// `!(a > b)` is deliberate: NaN must stop the search.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use ikdl_core::coding::SparseCodeMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn unit_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    m
}

/// Explicit feature map of `(x^T y + alpha)^2`: every ordered pair product,
/// then `sqrt(2 alpha) x`, then `alpha`.
pub fn poly2_features(x: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for a in x {
        for b in x {
            out.push(a * b);
        }
    }
    out.extend(x.iter().map(|v| (2.0 * alpha).sqrt() * v));
    out.push(alpha);
    out
}

pub fn poly2_map(y: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = y.column_iter().map(|c| poly2_features(c.as_slice(), alpha)).collect();
    DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
}

pub struct OracleCode {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub residual_sq: f64,
}

/// Greedy pursuit that re-solves the normal equations with an explicit
/// inverse at every step. Same selection and stopping rules as the library.
pub fn omp_oracle(d: &DMatrix<f64>, y: &[f64], s: usize) -> OracleCode {
    let y = DVector::from_column_slice(y);
    let mut support: Vec<usize> = Vec::new();
    let mut values = DVector::zeros(0);
    let mut r = y.clone();
    while support.len() < s && r.norm() > 0.0 {
        let corr = d.tr_mul(&r);
        let mut best: Option<usize> = None;
        for j in 0..d.ncols() {
            if support.contains(&j) {
                continue;
            }
            if best.is_none_or(|b| corr[j].abs() > corr[b].abs()) {
                best = Some(j);
            }
        }
        let Some(k) = best else { break };
        let held = support.iter().map(|&j| corr[j].abs()).fold(0.0, f64::max);
        if !(corr[k].abs() > held) {
            break;
        }
        support.push(k);
        let ds = d.select_columns(&support);
        let inv = (ds.tr_mul(&ds)).try_inverse().expect("invertible support gram");
        values = inv * ds.tr_mul(&y);
        r = &y - &ds * &values;
    }
    OracleCode {
        support,
        values: values.as_slice().to_vec(),
        residual_sq: r.norm_squared(),
    }
}

pub fn codes_from(x: DMatrix<f64>) -> SparseCodeMatrix {
    SparseCodeMatrix::from_dense(x)
}

/// Columns of `got` equal columns of `want` up to a per-column sign; returns
/// the signs used.
pub fn assert_columns_match_up_to_sign(got: &DMatrix<f64>, want: &DMatrix<f64>, tol: f64) -> Vec<f64> {
    assert_eq!(got.shape(), want.shape());
    let mut signs = Vec::new();
    for j in 0..got.ncols() {
        let (g, w) = (got.column(j), want.column(j));
        let s = if g.dot(&w) < 0.0 { -1.0 } else { 1.0 };
        let diff = (g - w * s).amax();
        assert!(diff <= tol, "column {j} differs by {diff:e}");
        signs.push(s);
    }
    signs
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}
