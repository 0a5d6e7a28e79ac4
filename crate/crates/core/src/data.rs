//! Labeled datasets, seeded per-class splits and synthetic subspace data.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::learn::class_rng;
use crate::linalg::{check_finite, col, col_mut, norm};

/// Something worth telling the user about that did not stop loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataWarning {
    /// Raw labels were not `0..C`; `original[c]` is the raw label now called `c`.
    LabelsRemapped { original: Vec<i64> },
}

impl core::fmt::Display for DataWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DataWarning::LabelsRemapped { original } => {
                write!(f, "labels remapped to 0..{}: original ids {:?}", original.len(), original)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    signals: DMatrix<f64>,
    labels: Vec<usize>,
    class_labels: Vec<i64>,
}

impl LabeledDataset {
    /// Validates entries and remaps arbitrary integer labels to contiguous
    /// ids in ascending order of the raw label.
    pub fn from_raw(signals: DMatrix<f64>, raw_labels: &[i64]) -> Result<(Self, Vec<DataWarning>)> {
        if raw_labels.len() != signals.ncols() {
            return Err(Error::DimensionMismatch {
                context: "labels per signal",
                expected: signals.ncols(),
                found: raw_labels.len(),
            });
        }
        if signals.ncols() == 0 || signals.nrows() == 0 {
            return Err(Error::InvalidConfig("dataset has no signals".into()));
        }
        check_finite(&signals)?;
        let mut class_labels = raw_labels.to_vec();
        class_labels.sort_unstable();
        class_labels.dedup();
        let labels = raw_labels
            .iter()
            .map(|l| class_labels.binary_search(l).expect("label present"))
            .collect();
        let contiguous = class_labels.iter().enumerate().all(|(i, &l)| l == i as i64);
        let warnings = if contiguous {
            Vec::new()
        } else {
            vec![DataWarning::LabelsRemapped {
                original: class_labels.clone(),
            }]
        };
        Ok((
            LabeledDataset {
                signals,
                labels,
                class_labels,
            },
            warnings,
        ))
    }

    /// Builds a dataset from per-class matrices; class `i` gets label `i`.
    pub fn from_classes(classes: &[DMatrix<f64>]) -> Result<Self> {
        let m = crate::learn::check_class_signals(classes)?;
        let total = classes.iter().map(|c| c.ncols()).sum();
        let mut signals = DMatrix::<f64>::zeros(m, total);
        let mut labels = Vec::with_capacity(total);
        let mut at = 0;
        for (i, c) in classes.iter().enumerate() {
            signals.as_mut_slice()[at * m..(at + c.ncols()) * m].copy_from_slice(c.as_slice());
            labels.extend(core::iter::repeat_n(i, c.ncols()));
            at += c.ncols();
        }
        Ok(LabeledDataset {
            signals,
            labels,
            class_labels: (0..classes.len() as i64).collect(),
        })
    }

    pub fn signals(&self) -> &DMatrix<f64> {
        &self.signals
    }

    /// Contiguous class id of every column.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Raw label of every contiguous class id.
    pub fn class_labels(&self) -> &[i64] {
        &self.class_labels
    }

    pub fn dim(&self) -> usize {
        self.signals.nrows()
    }

    pub fn len(&self) -> usize {
        self.signals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Column indices of each class, in dataset order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_classes()];
        for (l, &c) in self.labels.iter().enumerate() {
            out[c].push(l);
        }
        out
    }

    /// `Y_i` for every class.
    pub fn class_matrices(&self) -> Vec<DMatrix<f64>> {
        self.class_indices()
            .iter()
            .map(|idx| self.gather(idx))
            .collect()
    }

    fn gather(&self, idx: &[usize]) -> DMatrix<f64> {
        let m = self.dim();
        let mut out = DMatrix::<f64>::zeros(m, idx.len());
        for (j, &l) in idx.iter().enumerate() {
            col_mut(&mut out, j).copy_from_slice(col(&self.signals, l));
        }
        out
    }

    fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            signals: self.gather(idx),
            labels: idx.iter().map(|&l| self.labels[l]).collect(),
            class_labels: self.class_labels.clone(),
        }
    }
}

/// Training share of every class: an absolute count or a fraction of the
/// class size (rounded to nearest).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum TrainCount {
    Count(usize),
    Fraction(f64),
}

impl TrainCount {
    fn for_class(&self, size: usize) -> Option<usize> {
        let k = match *self {
            TrainCount::Count(k) => k,
            TrainCount::Fraction(f) if f.is_finite() && f > 0.0 && f < 1.0 => libm::round(f * size as f64) as usize,
            TrainCount::Fraction(_) => return None,
        };
        (k >= 1 && k < size).then_some(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SplitSpec {
    pub per_class_train: TrainCount,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

/// Seeded shuffle inside each class; the first `per_class_train` shuffled
/// columns go to training. Both outputs keep the dataset's column order.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in ds.class_indices().into_iter().enumerate() {
        let k = spec.per_class_train.for_class(idx.len()).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "class {} has {} signals; cannot train on {:?} and keep a test signal",
                ds.class_labels[c],
                idx.len(),
                spec.per_class_train
            ))
        })?;
        idx.shuffle(&mut class_rng(spec.seed, c));
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SynthParams {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub subspace_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(String::from(msg)));
        if self.classes == 0 || self.per_class == 0 || self.dim == 0 {
            return bad("classes, per_class and dim must be positive");
        }
        if self.subspace_dim == 0 || self.subspace_dim >= self.dim {
            return bad("subspace_dim must satisfy 1 <= subspace_dim < dim");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be finite and non-negative");
        }
        Ok(())
    }
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_iterator(rows, cols, (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Union of random subspaces: class `i` lives near a seeded orthonormal
/// basis `B_i`. Columns are grouped by class and unit-normalized; a column
/// that comes out exactly zero is left as is.
pub fn synth_dataset(p: &SynthParams) -> Result<LabeledDataset> {
    p.validate()?;
    let mut classes = Vec::with_capacity(p.classes);
    for c in 0..p.classes {
        let mut rng = class_rng(p.seed, c);
        let basis = gaussian_matrix(&mut rng, p.dim, p.subspace_dim).qr().q();
        let coef = gaussian_matrix(&mut rng, p.subspace_dim, p.per_class);
        let mut y = basis * coef;
        if p.noise_sigma > 0.0 {
            y += gaussian_matrix(&mut rng, p.dim, p.per_class) * p.noise_sigma;
        }
        for l in 0..p.per_class {
            let column = col_mut(&mut y, l);
            let s = norm(column);
            if s > 0.0 {
                column.iter_mut().for_each(|v| *v /= s);
            }
        }
        classes.push(y);
    }
    LabeledDataset::from_classes(&classes)
}
