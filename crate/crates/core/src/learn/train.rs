use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::init::{class_rng, init_coef_dictionary, init_dictionary};
use super::objective::{objective_idl, objective_ikdl};
use super::sweep::{idl_atom_sweep, ikdl_atom_sweep, replace_unused_atoms, replace_unused_coef_atoms};
use super::{check_class_signals, CoefDictionary, Dictionary, TrainConfig};
use crate::coding::{batch_komp_report, batch_omp_report, BatchStats, CoderConfig, SparseCodeMatrix};
use crate::error::{Error, Result};
use crate::kernel::{gram_symmetric, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainStats {
    pub replaced_atoms: usize,
    pub degenerate_atoms: usize,
    pub dropped_candidates: u64,
    pub jittered_codes: u64,
}

impl TrainStats {
    fn absorb(&mut self, b: BatchStats) {
        self.dropped_candidates += b.dropped;
        self.jittered_codes += b.jittered;
    }
}

#[derive(Debug, Clone)]
pub struct LinearTraining {
    pub dictionaries: Vec<Dictionary>,
    pub codes: Vec<SparseCodeMatrix>,
    /// Objective with the initial dictionaries, then after every iteration.
    pub objective: Vec<f64>,
    pub stats: TrainStats,
}

/// Other classes' dictionaries side by side, in class order.
pub fn linear_complement(dicts: &[Dictionary], i: usize) -> DMatrix<f64> {
    let m = dicts[i].dim();
    let total: usize = dicts.iter().enumerate().filter(|(l, _)| *l != i).map(|(_, d)| d.n_atoms()).sum();
    let mut out = DMatrix::<f64>::zeros(m, total);
    let mut at = 0;
    for (l, d) in dicts.iter().enumerate() {
        if l == i {
            continue;
        }
        let cols = d.n_atoms() * m;
        out.as_mut_slice()[at * m..at * m + cols].copy_from_slice(d.atoms().as_slice());
        at += d.n_atoms();
    }
    out
}

pub fn train_idl(classes: &[DMatrix<f64>], cfg: &TrainConfig) -> Result<LinearTraining> {
    cfg.validate()?;
    if cfg.kernel.is_some() {
        return Err(Error::InvalidConfig("linear training called with a kernel".into()));
    }
    check_class_signals(classes)?;
    let coder = CoderConfig::training(cfg.sparsity);
    let mut stats = TrainStats::default();

    let mut dicts = Vec::with_capacity(classes.len());
    let mut codes = Vec::with_capacity(classes.len());
    for (i, y) in classes.iter().enumerate() {
        let d = init_dictionary(y, cfg.n_atoms, &mut class_rng(cfg.seed, i))?;
        let (x, b) = batch_omp_report(d.atoms(), y, &coder)?;
        stats.absorb(b);
        dicts.push(d);
        codes.push(x);
    }

    let mut objective = Vec::with_capacity(cfg.iterations + 1);
    objective.push(objective_idl(classes, &dicts, &codes, cfg.gamma)?);
    for it in 0..cfg.iterations {
        for (i, y) in classes.iter().enumerate() {
            if it > 0 && cfg.recode_every_iteration {
                let (x, b) = batch_omp_report(dicts[i].atoms(), y, &coder)?;
                stats.absorb(b);
                codes[i] = x;
            }
            let complement = linear_complement(&dicts, i);
            let report = idl_atom_sweep(y, &mut dicts[i], &complement, &mut codes[i], cfg.gamma, cfg.mode)?;
            stats.degenerate_atoms += report.degenerate;
            stats.replaced_atoms += replace_unused_atoms(y, &mut dicts[i], &codes[i], &report.error).len();
        }
        objective.push(objective_idl(classes, &dicts, &codes, cfg.gamma)?);
    }

    Ok(LinearTraining {
        dictionaries: dicts,
        codes,
        objective,
        stats,
    })
}

/// Gram matrix of all training signals, addressed by class blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGrams {
    spec: KernelSpec,
    full: DMatrix<f64>,
    offsets: Vec<usize>,
}

impl ClassGrams {
    pub fn build(spec: &KernelSpec, classes: &[DMatrix<f64>]) -> Result<Self> {
        let m = check_class_signals(classes)?;
        let total: usize = classes.iter().map(|y| y.ncols()).sum();
        let mut all = DMatrix::<f64>::zeros(m, total);
        let mut offsets = Vec::with_capacity(classes.len() + 1);
        let mut at = 0;
        for y in classes {
            offsets.push(at);
            all.as_mut_slice()[at * m..(at + y.ncols()) * m].copy_from_slice(y.as_slice());
            at += y.ncols();
        }
        offsets.push(at);
        let full = gram_symmetric(spec, &all)?.into_entries();
        Ok(ClassGrams {
            spec: *spec,
            full,
            offsets,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn n_classes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn class_len(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn full(&self) -> &DMatrix<f64> {
        &self.full
    }

    /// `gram(Y_r, Y_c)`: rows indexed by class `r`, columns by class `c`.
    /// The cross Gram `K_il` of class `i` against class `l` is `block(l, i)`.
    pub fn block(&self, r: usize, c: usize) -> DMatrix<f64> {
        self.full
            .view((self.offsets[r], self.offsets[c]), (self.class_len(r), self.class_len(c)))
            .into_owned()
    }

    /// Class Gram `K_ii`.
    pub fn class_gram(&self, i: usize) -> DMatrix<f64> {
        self.block(i, i)
    }
}

/// Stack of `A_l^T K_il` over `l != i`, in class order (`sum n_l x N_i`).
pub fn kernel_complement(coefs: &[CoefDictionary], grams: &ClassGrams, i: usize) -> DMatrix<f64> {
    let rows: usize = coefs.iter().enumerate().filter(|(l, _)| *l != i).map(|(_, a)| a.n_atoms()).sum();
    let n_i = grams.class_len(i);
    let mut out = DMatrix::<f64>::zeros(rows, n_i);
    let mut at = 0;
    for (l, a) in coefs.iter().enumerate() {
        if l == i {
            continue;
        }
        let k_il = grams
            .full
            .view((grams.offsets[l], grams.offsets[i]), (grams.class_len(l), n_i));
        let block = a.coefs().tr_mul(&k_il);
        out.view_mut((at, 0), (a.n_atoms(), n_i)).copy_from(&block);
        at += a.n_atoms();
    }
    out
}

/// `A^T K A`, symmetrized.
pub fn atom_gram(gram: &DMatrix<f64>, coefs: &DMatrix<f64>) -> DMatrix<f64> {
    let g = coefs.tr_mul(&(gram * coefs));
    (&g + g.transpose()) * 0.5
}

fn code_kernel(
    gram: &DMatrix<f64>,
    coefs: &CoefDictionary,
    coder: &CoderConfig,
) -> Result<(SparseCodeMatrix, BatchStats)> {
    let ka = gram * coefs.coefs();
    let g = {
        let g = coefs.coefs().tr_mul(&ka);
        (&g + g.transpose()) * 0.5
    };
    let corr = ka.transpose();
    let self_sims: Vec<f64> = (0..gram.nrows()).map(|l| gram[(l, l)]).collect();
    batch_komp_report(&g, &corr, &self_sims, coder)
}

#[derive(Debug, Clone)]
pub struct KernelTraining {
    pub coefs: Vec<CoefDictionary>,
    pub grams: ClassGrams,
    pub codes: Vec<SparseCodeMatrix>,
    pub objective: Vec<f64>,
    pub stats: TrainStats,
}

pub fn train_ikdl(classes: &[DMatrix<f64>], cfg: &TrainConfig) -> Result<KernelTraining> {
    cfg.validate()?;
    let spec = cfg
        .kernel
        .ok_or_else(|| Error::InvalidConfig("kernel training needs a kernel".into()))?;
    let grams = ClassGrams::build(&spec, classes)?;
    let class_grams: Vec<DMatrix<f64>> = (0..classes.len()).map(|i| grams.class_gram(i)).collect();
    let coder = CoderConfig::training(cfg.sparsity);
    let mut stats = TrainStats::default();

    let mut coefs = Vec::with_capacity(classes.len());
    let mut codes = Vec::with_capacity(classes.len());
    for (i, k) in class_grams.iter().enumerate() {
        let a = init_coef_dictionary(k.nrows(), cfg.n_atoms, k, &mut class_rng(cfg.seed, i))?;
        let (x, b) = code_kernel(k, &a, &coder)?;
        stats.absorb(b);
        coefs.push(a);
        codes.push(x);
    }

    let mut objective = Vec::with_capacity(cfg.iterations + 1);
    objective.push(objective_ikdl(&grams, &coefs, &codes, cfg.gamma)?);
    for it in 0..cfg.iterations {
        for (i, k) in class_grams.iter().enumerate() {
            if it > 0 && cfg.recode_every_iteration {
                let (x, b) = code_kernel(k, &coefs[i], &coder)?;
                stats.absorb(b);
                codes[i] = x;
            }
            let khat = kernel_complement(&coefs, &grams, i);
            let report = ikdl_atom_sweep(k, &mut coefs[i], &khat, &mut codes[i], cfg.gamma, cfg.mode)?;
            stats.degenerate_atoms += report.degenerate;
            stats.replaced_atoms += replace_unused_coef_atoms(k, &mut coefs[i], &codes[i], &report.error).len();
        }
        objective.push(objective_ikdl(&grams, &coefs, &codes, cfg.gamma)?);
    }

    Ok(KernelTraining {
        coefs,
        grams,
        codes,
        objective,
        stats,
    })
}
