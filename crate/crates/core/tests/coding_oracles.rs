mod common;

use common::*;
use ikdl_core::coding::{batch_komp, batch_omp, komp, omp, CoderConfig, SparseCodeMatrix};
use ikdl_core::kernel::{gram, kernel_eval, KernelSpec};
use nalgebra::{DMatrix, DVector};

#[test]
fn omp_matches_normal_equations_oracle() {
    for seed in 0..50 {
        let mut r = rng(seed);
        let d = unit_columns(gaussian(&mut r, 8, 5));
        let y = gaussian(&mut r, 8, 1);
        let code = omp(&d, y.as_slice(), 2, 0.0).unwrap();
        let want = omp_oracle(&d, y.as_slice(), 2);
        assert_eq!(code.support, want.support, "seed {seed}");
        for (a, b) in code.values.iter().zip(&want.values) {
            assert!((a - b).abs() <= 1e-10, "seed {seed}: {a} vs {b}");
        }
        assert!((code.residual_sq - want.residual_sq).abs() <= 1e-10);
    }
}

#[test]
fn full_support_gives_least_squares() {
    let mut r = rng(7);
    let d = unit_columns(gaussian(&mut r, 9, 4));
    let y = gaussian(&mut r, 9, 1);
    let code = omp(&d, y.as_slice(), 4, 0.0).unwrap();
    let x = d.clone().svd(true, true).solve(&y, 1e-14).unwrap();
    let dense = code.to_dense(4);
    for j in 0..4 {
        assert!((dense[j] - x[j]).abs() < 1e-10);
    }
    let opt = (&y - &d * &x).norm_squared();
    assert!((code.residual_sq - opt).abs() < 1e-10);
}

#[test]
fn komp_reduces_to_omp_under_linear_kernel() {
    for seed in 0..200 {
        let mut r = rng(1000 + seed);
        let m = 6 + (seed as usize % 5);
        let n = 4 + (seed as usize % 7);
        let s = 1 + (seed as usize % n.min(5));
        let d = unit_columns(gaussian(&mut r, m, n));
        let y = gaussian(&mut r, m, 1);
        let a = omp(&d, y.as_slice(), s, 0.0).unwrap();
        let g = d.tr_mul(&d);
        let p = d.tr_mul(&y);
        let b = komp(&g, p.as_slice(), y.norm_squared(), s, 0.0).unwrap();
        assert_eq!(a.support, b.support, "seed {seed}");
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((u - v).abs() <= 1e-9, "seed {seed}: {u} vs {v}");
        }
    }
}

#[test]
fn polynomial_gram_matches_explicit_feature_map() {
    let mut r = rng(3);
    let a = gaussian(&mut r, 3, 5);
    let b = gaussian(&mut r, 3, 4);
    for alpha in [0.0, 0.5, 2.0] {
        let spec = KernelSpec::Polynomial { alpha, beta: 2 };
        let k = gram(&spec, &a, &b).unwrap();
        let explicit = poly2_map(&a, alpha).tr_mul(&poly2_map(&b, alpha));
        assert!(max_abs_diff(k.entries(), &explicit) <= 1e-10);
    }
}

#[test]
fn komp_matches_omp_in_explicit_polynomial_space() {
    let alpha = 1.0;
    let spec = KernelSpec::Polynomial { alpha, beta: 2 };
    for seed in 0..20 {
        let mut r = rng(500 + seed);
        let y_train = gaussian(&mut r, 3, 5);
        let k = gram(&spec, &y_train, &y_train).unwrap().into_entries();
        // Atoms: normalized random combinations of the training features.
        let mut coefs = gaussian(&mut r, 5, 4);
        for j in 0..4 {
            let c = coefs.column(j).into_owned();
            let kn = c.dot(&(&k * &c)).sqrt();
            coefs.column_mut(j).unscale_mut(kn);
        }
        let phi = poly2_map(&y_train, alpha);
        let d = &phi * &coefs;
        let y = gaussian(&mut r, 3, 1);
        let phi_y = DVector::from_vec(poly2_features(y.as_slice(), alpha));

        let g = coefs.tr_mul(&(&k * &coefs));
        let ky = DVector::from_fn(5, |l, _| kernel_eval(&spec, y_train.column(l).as_slice(), y.as_slice()).unwrap());
        let p = coefs.tr_mul(&ky);
        let kyy = kernel_eval(&spec, y.as_slice(), y.as_slice()).unwrap();
        let got = komp(&g, p.as_slice(), kyy, 2, 0.0).unwrap();
        let want = omp(&d, phi_y.as_slice(), 2, 0.0).unwrap();
        assert_eq!(got.support, want.support);
        for (u, v) in got.values.iter().zip(&want.values) {
            assert!((u - v).abs() <= 1e-8);
        }
        assert!((got.residual_sq - want.residual_sq).abs() <= 1e-8);
    }
}

#[test]
fn batch_coding_matches_sequential_loop_and_permutes() {
    let mut r = rng(11);
    let d = unit_columns(gaussian(&mut r, 10, 12));
    let y = gaussian(&mut r, 10, 100);
    let cfg = CoderConfig::training(3);
    let batch = batch_omp(&d, &y, &cfg).unwrap();
    let mut seq = SparseCodeMatrix::zeros(12, 100);
    for l in 0..100 {
        seq.set_column(l, &omp(&d, y.column(l).as_slice(), 3, 0.0).unwrap());
    }
    assert_eq!(batch, seq);

    let perm: Vec<usize> = (0..100).rev().collect();
    let permuted = batch_omp(&d, &y.select_columns(&perm), &cfg).unwrap();
    assert_eq!(permuted.as_matrix(), &batch.as_matrix().select_columns(&perm));

    let one = batch_omp(&d, &y.columns(5, 1).into_owned(), &cfg).unwrap();
    assert_eq!(one.as_matrix().column(0), batch.as_matrix().column(5));

    let g = d.tr_mul(&d);
    let corr = d.tr_mul(&y);
    let self_sims: Vec<f64> = y.column_iter().map(|c| c.norm_squared()).collect();
    let kb = batch_komp(&g, &corr, &self_sims, &cfg).unwrap();
    assert!(max_abs_diff(kb.as_matrix(), batch.as_matrix()) < 1e-9);
}

#[test]
fn rank_deficient_dictionary_is_coded_without_failure() {
    let base = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let mut d = DMatrix::zeros(3, 3);
    d.columns_mut(0, 2).copy_from(&base);
    d.column_mut(2).copy_from(&base.column(0));
    let code = omp(&d, &[2.0, 1.0, 0.0], 3, 0.0).unwrap();
    assert!(code.residual_sq < 1e-20);
    assert!(code.support.len() <= 2);
}
