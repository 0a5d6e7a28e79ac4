//! JSON run configuration: the training hyperparameters plus where the data
//! comes from and how it is split. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "n_atoms": 40, "sparsity": 20, "iterations": 10, "gamma": 0.1,
//!   "kernel": { "kind": "rbf", "sigma": 4 },
//!   "dataset": { "signals": "yaleb.csv", "labels": "yaleb_labels.txt" },
//!   "split": { "per_class_train": 0.5 }
//! }
//! ```
//!
//! Relative dataset paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use ikdl_core::{KernelSpec, SplitSpec, SynthParams, TrainConfig, TrainCount, UpdateMode};
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetFormat;
use crate::error::{Error, Result};

fn default_mode() -> UpdateMode {
    UpdateMode::Uaksvd
}

fn default_true() -> bool {
    true
}

fn default_split() -> SplitSpec {
    SplitSpec {
        per_class_train: TrainCount::Fraction(0.5),
        seed: 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Name used in reports; defaults to the signals file stem or `synth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n_atoms: usize,
    pub sparsity: usize,
    pub iterations: usize,
    pub gamma: f64,
    #[serde(default = "default_mode")]
    pub mode: UpdateMode,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub recode_every_iteration: bool,
    pub dataset: DatasetSource,
    #[serde(default = "default_split")]
    pub split: SplitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchGrid>,
}

/// Either dataset files or synthetic generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DatasetFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthParams>,
}

/// Cells run by `bench`: every mode x kernel x gamma, for every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchGrid {
    #[serde(default = "all_modes")]
    pub modes: Vec<UpdateMode>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<Option<KernelSpec>>,
    /// Defaults to the top-level `gamma`.
    #[serde(default)]
    pub gammas: Vec<f64>,
}

fn all_modes() -> Vec<UpdateMode> {
    vec![UpdateMode::Aksvd, UpdateMode::Uaksvd]
}

/// Linear, RBF with `sigma = 4`, and polynomial with `alpha = 2, beta = 2`.
pub fn default_kernels() -> Vec<Option<KernelSpec>> {
    vec![
        None,
        Some(KernelSpec::Rbf { sigma: 4.0 }),
        Some(KernelSpec::Polynomial { alpha: 2.0, beta: 2 }),
    ]
}

impl Default for BenchGrid {
    fn default() -> Self {
        BenchGrid {
            modes: all_modes(),
            kernels: default_kernels(),
            gammas: Vec::new(),
        }
    }
}

pub enum ResolvedSource {
    Files {
        signals: PathBuf,
        labels: Option<PathBuf>,
        format: DatasetFormat,
    },
    Synth(SynthParams),
}

impl DatasetSource {
    pub fn resolve(&self, base: &Path) -> Result<ResolvedSource> {
        match (&self.signals, &self.synth) {
            (Some(signals), None) => {
                let signals = base.join(signals);
                let format = match self.format {
                    Some(f) => f,
                    None => DatasetFormat::from_path(&signals)?,
                };
                Ok(ResolvedSource::Files {
                    labels: self.labels.as_ref().map(|l| base.join(l)),
                    signals,
                    format,
                })
            }
            (None, Some(p)) if self.labels.is_none() && self.format.is_none() => Ok(ResolvedSource::Synth(*p)),
            _ => Err(Error::Usage(
                "dataset needs either `signals` (with `labels`, `format`) or `synth`, not both".into(),
            )),
        }
    }
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            n_atoms: self.n_atoms,
            sparsity: self.sparsity,
            iterations: self.iterations,
            gamma: self.gamma,
            mode: self.mode,
            kernel: self.kernel,
            seed: self.seed,
            recode_every_iteration: self.recode_every_iteration,
        }
    }

    pub fn dataset_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.dataset.signals {
            Some(p) => p.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned()),
            None => "synth".into(),
        }
    }

    /// Uses `seed` for training, splitting and synthetic generation.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.split.seed = seed;
        if let Some(s) = &mut self.dataset.synth {
            s.seed = seed;
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            field: e.column(),
            msg: e.to_string(),
        })?;
        cfg.train_config().validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}
