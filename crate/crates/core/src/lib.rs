//! Incoherent dictionary learning for sparse-representation classification,
//! in input space (IDL) and in a kernel-induced feature space (IKDL).
//!
//! The crate is `no_std` with `alloc`. File formats and the command-line
//! front end live in the `ikdl` crate.

#![no_std]
// `!(x >= 0.0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classify;
pub mod coding;
pub mod data;
pub mod error;
pub mod kernel;
pub mod learn;
pub mod linalg;

pub use classify::{
    classify, classify_kernel, classify_linear, discriminative_matrix, error_matrix, evaluate, squared_residuals,
    train, train_timed, ClassDictionaries, ClassifierModel, Clock, Confusion, Decision, EvalReport, KernelClass,
    ModelKind, NoClock,
};
pub use coding::{batch_komp, batch_omp, komp, omp, CoderConfig, SparseCode, SparseCodeMatrix, Tolerance};
pub use data::{split, synth_dataset, DataWarning, LabeledDataset, SplitSpec, SynthParams, TrainCount};
pub use error::{Error, Result};
pub use kernel::{gram, kernel_eval, GramMatrix, KernelSpec};
pub use learn::{train_idl, train_ikdl, CoefDictionary, Dictionary, TrainConfig, UpdateMode};
