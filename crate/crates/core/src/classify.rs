//! Residual-based classification with one dictionary per class.
//!
//! A signal is assigned to the class whose dictionary reconstructs it with
//! the smallest (squared) sparse-approximation residual; ties go to the
//! lowest class id.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::coding::{komp, omp_unchecked, CoderConfig};
use crate::error::{Error, Result};
use crate::kernel::{gram, gram_symmetric, kernel_column, KernelSpec};
use crate::learn::{atom_gram, train_idl, train_ikdl, CoefDictionary, Dictionary, TrainConfig};
use crate::linalg::{check_finite_vec, col, dot, frobenius_sq};

/// Monotonic time source in seconds.
pub trait Clock {
    fn seconds(&self) -> f64;
}

impl<F: Fn() -> f64> Clock for F {
    fn seconds(&self) -> f64 {
        self()
    }
}

/// Clock for environments without a timer; all timings read zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// Kernel-space dictionary of one class together with what classification
/// needs at test time.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelClass {
    coefs: CoefDictionary,
    signals: DMatrix<f64>,
    gram: DMatrix<f64>,
    atom_gram: DMatrix<f64>,
}

impl KernelClass {
    /// Rebuilds the class Gram from the stored signals and validates the
    /// kernel norm of every atom.
    pub fn new(spec: &KernelSpec, coefs: DMatrix<f64>, signals: DMatrix<f64>) -> Result<Self> {
        let gram = gram_symmetric(spec, &signals)?.into_entries();
        let coefs = CoefDictionary::new(coefs, &gram)?;
        let atom_gram = atom_gram(&gram, coefs.coefs());
        Ok(KernelClass {
            coefs,
            signals,
            gram,
            atom_gram,
        })
    }

    pub fn coefs(&self) -> &CoefDictionary {
        &self.coefs
    }

    pub fn signals(&self) -> &DMatrix<f64> {
        &self.signals
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `A^T K A`
    pub fn atom_gram(&self) -> &DMatrix<f64> {
        &self.atom_gram
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassDictionaries {
    Linear(Vec<Dictionary>),
    Kernel(Vec<KernelClass>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Kernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    config: TrainConfig,
    labels: Vec<i64>,
    dim: usize,
    classes: ClassDictionaries,
    objective: Vec<f64>,
}

impl ClassifierModel {
    pub fn from_parts(
        config: TrainConfig,
        labels: Vec<i64>,
        classes: ClassDictionaries,
        objective: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let (count, dims, atoms): (usize, Vec<usize>, Vec<usize>) = match &classes {
            ClassDictionaries::Linear(d) => {
                if config.kernel.is_some() {
                    return Err(Error::InvalidConfig("linear model with a kernel config".into()));
                }
                (d.len(), d.iter().map(Dictionary::dim).collect(), d.iter().map(Dictionary::n_atoms).collect())
            }
            ClassDictionaries::Kernel(k) => {
                if config.kernel.is_none() {
                    return Err(Error::InvalidConfig("kernel model without a kernel config".into()));
                }
                (
                    k.len(),
                    k.iter().map(|c| c.signals.nrows()).collect(),
                    k.iter().map(|c| c.coefs.n_atoms()).collect(),
                )
            }
        };
        if count == 0 {
            return Err(Error::InvalidConfig("model needs at least one class".into()));
        }
        if labels.len() != count {
            return Err(Error::DimensionMismatch {
                context: "model labels",
                expected: count,
                found: labels.len(),
            });
        }
        let dim = dims[0];
        for (&d, &n) in dims.iter().zip(&atoms) {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    context: "model signal dimension",
                    expected: dim,
                    found: d,
                });
            }
            if n != config.n_atoms {
                return Err(Error::DimensionMismatch {
                    context: "model atoms per class",
                    expected: config.n_atoms,
                    found: n,
                });
            }
        }
        Ok(ClassifierModel {
            config,
            labels,
            dim,
            classes,
            objective,
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self.classes {
            ClassDictionaries::Linear(_) => ModelKind::Linear,
            ClassDictionaries::Kernel(_) => ModelKind::Kernel,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn kernel(&self) -> Option<&KernelSpec> {
        self.config.kernel.as_ref()
    }

    /// Original class identifiers, indexed by contiguous class id.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                context: "model labels",
                expected: self.n_classes(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &ClassDictionaries {
        &self.classes
    }

    /// Training objective, initial value first.
    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Short algorithm name, e.g. `IKDL UAK-SVD`.
    pub fn algorithm(&self) -> &'static str {
        use crate::learn::UpdateMode::*;
        match (self.kind(), self.config.mode) {
            (ModelKind::Linear, Aksvd) => "IDL AK-SVD",
            (ModelKind::Linear, Uaksvd) => "IDL UAK-SVD",
            (ModelKind::Kernel, Aksvd) => "IKDL AK-SVD",
            (ModelKind::Kernel, Uaksvd) => "IKDL UAK-SVD",
        }
    }
}

/// Trains a linear model when `cfg.kernel` is `None`, a kernel model otherwise.
pub fn train(classes: &[DMatrix<f64>], cfg: &TrainConfig) -> Result<ClassifierModel> {
    let labels: Vec<i64> = (0..classes.len() as i64).collect();
    match cfg.kernel {
        None => {
            let t = train_idl(classes, cfg)?;
            ClassifierModel::from_parts(cfg.clone(), labels, ClassDictionaries::Linear(t.dictionaries), t.objective)
        }
        Some(_) => {
            let t = train_ikdl(classes, cfg)?;
            let mut kc = Vec::with_capacity(classes.len());
            for (i, a) in t.coefs.into_iter().enumerate() {
                let gram = t.grams.class_gram(i);
                let atom_gram = atom_gram(&gram, a.coefs());
                kc.push(KernelClass {
                    coefs: a,
                    signals: classes[i].clone(),
                    gram,
                    atom_gram,
                });
            }
            ClassifierModel::from_parts(cfg.clone(), labels, ClassDictionaries::Kernel(kc), t.objective)
        }
    }
}

/// [`train`] plus the wall-clock seconds it took.
pub fn train_timed(classes: &[DMatrix<f64>], cfg: &TrainConfig, clock: &dyn Clock) -> Result<(ClassifierModel, f64)> {
    let t0 = clock.seconds();
    let model = train(classes, cfg)?;
    Ok((model, clock.seconds() - t0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub class: usize,
    /// Residual norms (linear models) or squared residuals (kernel models),
    /// one per class.
    pub residuals: Vec<f64>,
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn check_signal(y: &[f64], model: &ClassifierModel) -> Result<()> {
    if y.len() != model.dim {
        return Err(Error::DimensionMismatch {
            context: "signal dimension",
            expected: model.dim,
            found: y.len(),
        });
    }
    check_finite_vec(y)
}

/// Squared reconstruction residual of `y` against every class.
pub fn squared_residuals(y: &[f64], model: &ClassifierModel) -> Result<Vec<f64>> {
    check_signal(y, model)?;
    let coder = CoderConfig::classification(model.config.sparsity);
    match &model.classes {
        ClassDictionaries::Linear(dicts) => {
            let eps = coder.eps_for(libm::sqrt(dot(y, y)));
            Ok(dicts
                .iter()
                .map(|d| omp_unchecked(d.atoms(), y, model.config.sparsity, eps).residual_sq)
                .collect())
        }
        ClassDictionaries::Kernel(classes) => {
            let spec = model.config.kernel.ok_or(Error::WrongModelKind { expected: "kernel" })?;
            let kyy = spec.apply(y, y);
            let eps = coder.eps_for(libm::sqrt(kyy.max(0.0)));
            let mut out = Vec::with_capacity(classes.len());
            for c in classes {
                let ky = kernel_column(&spec, &c.signals, y);
                let p = c.coefs.coefs().tr_mul(&ky);
                let code = komp(&c.atom_gram, p.as_slice(), kyy, model.config.sparsity, eps)?;
                out.push(code.residual_sq);
            }
            Ok(out)
        }
    }
}

/// Smallest-residual decision for a linear model; residuals are norms.
pub fn classify_linear(y: &[f64], model: &ClassifierModel) -> Result<Decision> {
    if model.kind() != ModelKind::Linear {
        return Err(Error::WrongModelKind { expected: "linear" });
    }
    let sq = squared_residuals(y, model)?;
    Ok(Decision {
        class: argmin(&sq),
        residuals: sq.iter().map(|v| libm::sqrt(*v)).collect(),
    })
}

/// Smallest-residual decision for a kernel model; residuals are squared
/// feature-space norms `k(y,y) + x^T A^T K A x - 2 k(y,Y) A x`.
pub fn classify_kernel(y: &[f64], model: &ClassifierModel) -> Result<Decision> {
    if model.kind() != ModelKind::Kernel {
        return Err(Error::WrongModelKind { expected: "kernel" });
    }
    let sq = squared_residuals(y, model)?;
    Ok(Decision {
        class: argmin(&sq),
        residuals: sq,
    })
}

pub fn classify(y: &[f64], model: &ClassifierModel) -> Result<Decision> {
    match model.kind() {
        ModelKind::Linear => classify_linear(y, model),
        ModelKind::Kernel => classify_kernel(y, model),
    }
}

/// Row-major `C x C` count matrix; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    n: usize,
    counts: Vec<u64>,
}

impl Confusion {
    pub fn new(n: usize) -> Self {
        Confusion {
            n,
            counts: vec![0; n * n],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n + predicted]
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n + predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.n).map(|j| self.get(truth, j)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub train_time_s: f64,
    pub test_time_s: f64,
    pub confusion: Confusion,
    pub per_iteration_objective: Vec<f64>,
    pub truth: Vec<usize>,
    pub predictions: Vec<usize>,
}

impl EvalReport {
    pub fn from_predictions(truth: Vec<usize>, predictions: Vec<usize>, n_classes: usize) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::EmptyTestSet);
        }
        if truth.len() != predictions.len() {
            return Err(Error::DimensionMismatch {
                context: "predictions",
                expected: truth.len(),
                found: predictions.len(),
            });
        }
        let mut confusion = Confusion::new(n_classes);
        for (&t, &p) in truth.iter().zip(&predictions) {
            if t >= n_classes || p >= n_classes {
                return Err(Error::DimensionMismatch {
                    context: "class id",
                    expected: n_classes,
                    found: t.max(p),
                });
            }
            confusion.record(t, p);
        }
        let accuracy = confusion.correct() as f64 / confusion.total() as f64;
        Ok(EvalReport {
            accuracy,
            train_time_s: 0.0,
            test_time_s: 0.0,
            confusion,
            per_iteration_objective: Vec::new(),
            truth,
            predictions,
        })
    }
}

/// Classifies every column of every per-class test matrix. `test[i]` holds
/// the test signals of class `i`.
pub fn evaluate(test: &[DMatrix<f64>], model: &ClassifierModel, clock: &dyn Clock) -> Result<EvalReport> {
    if test.len() != model.n_classes() {
        return Err(Error::DimensionMismatch {
            context: "test classes",
            expected: model.n_classes(),
            found: test.len(),
        });
    }
    let mut truth = Vec::new();
    let mut predictions = Vec::new();
    let t0 = clock.seconds();
    for (i, y) in test.iter().enumerate() {
        for l in 0..y.ncols() {
            let d = classify(col(y, l), model).map_err(|e| e.at_column(truth.len()))?;
            truth.push(i);
            predictions.push(d.class);
        }
    }
    let elapsed = clock.seconds() - t0;
    let mut report = EvalReport::from_predictions(truth, predictions, model.n_classes())?;
    report.test_time_s = elapsed;
    report.per_iteration_objective = model.objective.clone();
    Ok(report)
}

/// `N_test x C` matrix of squared residuals of each test signal (columns of
/// `signals`) against each class.
pub fn error_matrix(signals: &DMatrix<f64>, model: &ClassifierModel) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::<f64>::zeros(signals.ncols(), model.n_classes());
    for l in 0..signals.ncols() {
        let r = squared_residuals(col(signals, l), model).map_err(|e| e.at_column(l))?;
        for (i, v) in r.into_iter().enumerate() {
            out[(l, i)] = v;
        }
    }
    Ok(out)
}

/// `C x C` matrix of squared Frobenius norms of the cross-coherence blocks:
/// `||D_l^T D_i||^2` (linear) or `||A_l^T K_il A_i||^2` (kernel), diagonal
/// included.
pub fn discriminative_matrix(model: &ClassifierModel) -> Result<DMatrix<f64>> {
    let c = model.n_classes();
    let mut out = DMatrix::<f64>::zeros(c, c);
    match &model.classes {
        ClassDictionaries::Linear(d) => {
            for i in 0..c {
                for l in 0..c {
                    out[(i, l)] = frobenius_sq(&d[l].atoms().tr_mul(d[i].atoms()));
                }
            }
        }
        ClassDictionaries::Kernel(k) => {
            let spec = model.config.kernel.ok_or(Error::WrongModelKind { expected: "kernel" })?;
            for i in 0..c {
                for l in 0..c {
                    out[(i, l)] = if i == l {
                        frobenius_sq(&k[i].atom_gram)
                    } else {
                        let k_il = gram(&spec, &k[l].signals, &k[i].signals)?.into_entries();
                        frobenius_sq(&(k[l].coefs.coefs().tr_mul(&k_il) * k[i].coefs.coefs()))
                    };
                }
            }
        }
    }
    Ok(out)
}
