use std::path::Path;
use std::time::Instant;

use ikdl_core::{split, synth_dataset, train, ClassifierModel, EvalReport, LabeledDataset, TrainConfig};

use crate::config::{ResolvedSource, RunConfig};
use crate::dataset::load_dataset;
use crate::error::Result;
use crate::eval::{evaluate, TestSet};

/// Loads or generates the configured dataset. Label warnings are logged.
pub fn load_source(cfg: &RunConfig, base: &Path) -> Result<LabeledDataset> {
    let ds = match cfg.dataset.resolve(base)? {
        ResolvedSource::Files { signals, labels, format } => {
            let (ds, warnings) = load_dataset(&signals, labels.as_deref(), format)?;
            for w in warnings {
                log::warn!("{}: {w}", signals.display());
            }
            ds
        }
        ResolvedSource::Synth(p) => synth_dataset(&p)?,
    };
    Ok(ds)
}

/// Loads the dataset and applies the configured split.
pub fn load_split(cfg: &RunConfig, base: &Path) -> Result<(LabeledDataset, LabeledDataset)> {
    let ds = load_source(cfg, base)?;
    Ok(split(&ds, &cfg.split)?)
}

/// Trains on `train`, carrying its original labels into the model, and
/// returns the model with its training wall time.
pub fn train_labeled(train_set: &LabeledDataset, cfg: &TrainConfig) -> Result<(ClassifierModel, f64)> {
    let classes = train_set.class_matrices();
    let t0 = Instant::now();
    let model = train(&classes, cfg)?;
    let secs = t0.elapsed().as_secs_f64();
    Ok((model.with_labels(train_set.class_labels().to_vec())?, secs))
}

pub struct RunResult {
    pub model: ClassifierModel,
    pub report: EvalReport,
}

/// Train, then evaluate on `test`; the report carries both timings.
pub fn train_and_evaluate(train_set: &LabeledDataset, test: &LabeledDataset, cfg: &TrainConfig) -> Result<RunResult> {
    let (model, train_s) = train_labeled(train_set, cfg)?;
    let mut report = evaluate(&TestSet::from_dataset(test, &model)?, &model)?;
    report.train_time_s = train_s;
    Ok(RunResult { model, report })
}
