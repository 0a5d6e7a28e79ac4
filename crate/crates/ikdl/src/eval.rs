//! Parallel classification over the columns of a test matrix.

use std::time::Instant;

use ikdl_core::{classify, ClassifierModel, Decision, EvalReport, LabeledDataset};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::raw_labels;
use crate::error::{Error, Result};

/// Test signals with ground truth expressed as model class ids.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub signals: DMatrix<f64>,
    pub truth: Vec<usize>,
}

impl TestSet {
    /// Maps original labels onto the model's classes; a label the model was
    /// not trained on is an error.
    pub fn from_raw(signals: DMatrix<f64>, labels: &[i64], model: &ClassifierModel) -> Result<Self> {
        let truth = labels
            .iter()
            .map(|l| {
                model
                    .labels()
                    .iter()
                    .position(|m| m == l)
                    .ok_or_else(|| Error::Usage(format!("test label {l} is not a class of the model")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TestSet { signals, truth })
    }

    pub fn from_dataset(ds: &LabeledDataset, model: &ClassifierModel) -> Result<Self> {
        Self::from_raw(ds.signals().clone(), &raw_labels(ds), model)
    }
}

/// Classifies every column in parallel; results keep column order.
pub fn predict(signals: &DMatrix<f64>, model: &ClassifierModel) -> Result<Vec<Decision>> {
    (0..signals.ncols())
        .into_par_iter()
        .map(|l| {
            let y: Vec<f64> = signals.column(l).iter().copied().collect();
            classify(&y, model).map_err(|e| {
                Error::Core(ikdl_core::Error::Column {
                    column: l,
                    source: Box::new(e),
                })
            })
        })
        .collect()
}

/// Accuracy, confusion and test time; `train_time_s` is left at zero.
pub fn evaluate(test: &TestSet, model: &ClassifierModel) -> Result<EvalReport> {
    if test.truth.is_empty() {
        return Err(ikdl_core::Error::EmptyTestSet.into());
    }
    let t0 = Instant::now();
    let decisions = predict(&test.signals, model)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let predictions = decisions.into_iter().map(|d| d.class).collect();
    let mut report = EvalReport::from_predictions(test.truth.clone(), predictions, model.n_classes())?;
    report.test_time_s = elapsed;
    report.per_iteration_objective = model.objective().to_vec();
    Ok(report)
}
