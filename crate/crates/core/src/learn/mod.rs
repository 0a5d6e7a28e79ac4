//! Per-class dictionary learning with an inter-class incoherence penalty.
//!
//! The linear problem learns unit-norm dictionaries `D_i` minimizing
//! `sum_i ||Y_i - D_i X_i||_F^2 + gamma * sum_i sum_{l != i} ||D_i^T D_l||_F^2`.
//! The kernel problem represents atoms as `phi(Y_i) a_j` and replaces the
//! penalty blocks by `A_i^T K_li A_l`. Both are solved by alternating sparse
//! coding with atom-by-atom sweeps in the AK-SVD style.

mod exact;
mod init;
mod objective;
mod sweep;
mod train;

use alloc::format;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{knorm, KernelSpec};
use crate::linalg::{col, norm};

pub use exact::{exact_atom_solve, kernel_atom_step, linear_atom_step};
pub use init::{class_rng, init_coef_dictionary, init_dictionary};
pub use objective::{objective_idl, objective_ikdl};
pub use sweep::{
    idl_atom_sweep, ikdl_atom_sweep, replace_unused_atoms, replace_unused_coef_atoms, SweepReport,
};
pub use train::{
    atom_gram, kernel_complement, linear_complement, train_idl, train_ikdl, ClassGrams, KernelTraining,
    LinearTraining, TrainStats,
};

/// Tolerance on the kernel norm of coefficient atoms.
pub const KERNEL_NORM_TOL: f64 = 1e-8;

/// Explicit dictionary with unit-norm columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
}

impl Dictionary {
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        crate::coding::check_unit_atoms(&atoms)?;
        Ok(Dictionary { atoms })
    }

    /// Normalizes every column; zero columns are rejected.
    pub fn from_columns(mut atoms: DMatrix<f64>) -> Result<Self> {
        for j in 0..atoms.ncols() {
            let n = norm(col(&atoms, j));
            if !(n > 0.0) {
                return Err(Error::NonUnitAtom { atom: j, norm: n });
            }
            atoms.column_mut(j).unscale_mut(n);
        }
        Ok(Dictionary { atoms })
    }

    pub(crate) fn from_raw(atoms: DMatrix<f64>) -> Self {
        Dictionary { atoms }
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.atoms
    }

    pub fn into_atoms(self) -> DMatrix<f64> {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }
}

/// Coefficients `A` of kernel-space atoms `phi(Y) A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefDictionary {
    coefs: DMatrix<f64>,
}

impl CoefDictionary {
    /// Checks that every atom has unit kernel norm under `gram`.
    pub fn new(coefs: DMatrix<f64>, gram: &DMatrix<f64>) -> Result<Self> {
        if coefs.nrows() != gram.nrows() {
            return Err(Error::DimensionMismatch {
                context: "coefficient rows vs gram size",
                expected: gram.nrows(),
                found: coefs.nrows(),
            });
        }
        for j in 0..coefs.ncols() {
            let n = knorm(col(&coefs, j), gram);
            if !((n - 1.0).abs() <= KERNEL_NORM_TOL) {
                return Err(Error::NonUnitAtom { atom: j, norm: n });
            }
        }
        Ok(CoefDictionary { coefs })
    }

    pub(crate) fn from_raw(coefs: DMatrix<f64>) -> Self {
        CoefDictionary { coefs }
    }

    pub fn coefs(&self) -> &DMatrix<f64> {
        &self.coefs
    }

    pub(crate) fn coefs_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.coefs
    }

    pub fn into_coefs(self) -> DMatrix<f64> {
        self.coefs
    }

    pub fn n_signals(&self) -> usize {
        self.coefs.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.coefs.ncols()
    }
}

/// Representation update rule applied after each atom update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum UpdateMode {
    /// `x = F^T d`, with `F` built from the previous atom.
    Aksvd,
    /// `x = E_I^T d + x`, i.e. the error rebuilt with the freshest atom.
    Uaksvd,
}

impl UpdateMode {
    pub fn name(&self) -> &'static str {
        match self {
            UpdateMode::Aksvd => "AK-SVD",
            UpdateMode::Uaksvd => "UAK-SVD",
        }
    }
}

#[cfg(feature = "serde")]
fn default_recode() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct TrainConfig {
    pub n_atoms: usize,
    pub sparsity: usize,
    pub iterations: usize,
    pub gamma: f64,
    pub mode: UpdateMode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub kernel: Option<KernelSpec>,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default = "default_recode"))]
    pub recode_every_iteration: bool,
}

impl Default for TrainConfig {
    /// 40 atoms, sparsity 20 and 10 iterations, linear with `gamma = 4`.
    fn default() -> Self {
        TrainConfig {
            n_atoms: 40,
            sparsity: 20,
            iterations: 10,
            gamma: 4.0,
            mode: UpdateMode::Uaksvd,
            kernel: None,
            seed: 0,
            recode_every_iteration: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::InvalidConfig("n_atoms must be positive".into()));
        }
        if self.sparsity == 0 || self.sparsity > self.n_atoms {
            return Err(Error::InvalidConfig(format!(
                "sparsity {} must lie in 1..={}",
                self.sparsity, self.n_atoms
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gamma {} must be finite and non-negative",
                self.gamma
            )));
        }
        if let Some(k) = &self.kernel {
            k.validate()?;
        }
        Ok(())
    }
}

/// Flips `atom` and `coefs` together so that the largest-magnitude
/// coefficient is positive (first one on ties).
pub(crate) fn orient(atom: &mut [f64], coefs: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in coefs.iter().enumerate() {
        if v.abs() > coefs[best].abs() {
            best = i;
        }
    }
    if coefs.get(best).is_some_and(|v| *v < 0.0) {
        atom.iter_mut().for_each(|v| *v = -*v);
        coefs.iter_mut().for_each(|v| *v = -*v);
    }
}

pub(crate) fn check_class_signals(classes: &[DMatrix<f64>]) -> Result<usize> {
    let first = classes
        .first()
        .ok_or_else(|| Error::InvalidConfig("at least one class is required".into()))?;
    let m = first.nrows();
    if m == 0 {
        return Err(Error::InvalidConfig("signals must have at least one row".into()));
    }
    for (i, y) in classes.iter().enumerate() {
        if y.ncols() == 0 {
            return Err(Error::EmptyClass(i));
        }
        if y.nrows() != m {
            return Err(Error::DimensionMismatch {
                context: "class signal dimension",
                expected: m,
                found: y.nrows(),
            });
        }
        crate::linalg::check_finite(y)?;
    }
    Ok(m)
}
