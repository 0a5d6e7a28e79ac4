//! CSV artifacts and the human-readable results table.

use ikdl_core::{ClassifierModel, Confusion, KernelSpec, UpdateMode};
use nalgebra::DMatrix;

use crate::dataset::fmt_f64;

pub const REPORT_COLUMNS: [&str; 6] = ["dataset", "algorithm", "kernel", "train_s", "test_s", "accuracy"];

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub algorithm: String,
    pub kernel: String,
    /// Unknown when the training manifest is unavailable.
    pub train_s: Option<f64>,
    pub test_s: f64,
    /// Fraction in `[0, 1]`.
    pub accuracy: f64,
}

impl ReportRow {
    pub fn fields(&self) -> [String; 6] {
        [
            self.dataset.clone(),
            self.algorithm.clone(),
            self.kernel.clone(),
            self.train_s.map(fmt_seconds).unwrap_or_default(),
            fmt_seconds(self.test_s),
            percent(self.accuracy),
        ]
    }
}

pub fn kernel_label(kernel: Option<&KernelSpec>) -> String {
    match kernel {
        None | Some(KernelSpec::Linear) => "linear".into(),
        Some(KernelSpec::Rbf { sigma }) => format!("rbf sigma={sigma}"),
        Some(KernelSpec::Polynomial { alpha, beta }) => format!("polynomial alpha={alpha} beta={beta}"),
    }
}

pub fn algorithm_label(kernel: Option<&KernelSpec>, mode: UpdateMode) -> String {
    let family = if kernel.is_some() { "IKDL" } else { "IDL" };
    format!("{family} {}", mode.name())
}

pub fn model_row(dataset: &str, model: &ClassifierModel, train_s: Option<f64>, test_s: f64, accuracy: f64) -> ReportRow {
    ReportRow {
        dataset: dataset.into(),
        algorithm: model.algorithm().into(),
        kernel: kernel_label(model.kernel()),
        train_s,
        test_s,
        accuracy,
    }
}

/// Accuracy as a percentage with two decimals.
pub fn percent(accuracy: f64) -> String {
    format!("{:.2}", accuracy * 100.0)
}

pub fn fmt_seconds(s: f64) -> String {
    format!("{s:.4}")
}

pub(crate) fn csv_bytes<I, R>(header: &[String], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>()).unwrap();
    }
    w.into_inner().unwrap()
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn report_csv(rows: &[ReportRow]) -> Vec<u8> {
    csv_bytes(&strings(&REPORT_COLUMNS), rows.iter().map(|r| r.fields()))
}

/// Column-aligned table of the same values as [`report_csv`].
pub fn report_table(rows: &[ReportRow]) -> String {
    let cells: Vec<[String; 6]> = rows.iter().map(ReportRow::fields).collect();
    let mut widths = REPORT_COLUMNS.map(str::len);
    for r in &cells {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |r: &[String]| {
        r.iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&strings(&REPORT_COLUMNS));
    out.push('\n');
    for r in &cells {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

pub fn confusion_csv(confusion: &Confusion, labels: &[i64]) -> Vec<u8> {
    let mut header = vec!["truth".to_string()];
    header.extend(labels.iter().map(i64::to_string));
    let rows = (0..confusion.n_classes()).map(|t| {
        let mut r = vec![labels[t].to_string()];
        r.extend((0..confusion.n_classes()).map(|p| confusion.get(t, p).to_string()));
        r
    });
    csv_bytes(&header, rows)
}

pub fn predictions_csv(truth: &[usize], predictions: &[usize], labels: &[i64]) -> Vec<u8> {
    let rows = truth
        .iter()
        .zip(predictions)
        .enumerate()
        .map(|(l, (&t, &p))| [l.to_string(), labels[t].to_string(), labels[p].to_string()]);
    csv_bytes(&strings(&["signal", "truth", "predicted"]), rows)
}

pub fn objective_csv(objective: &[f64]) -> Vec<u8> {
    let rows = objective.iter().enumerate().map(|(i, v)| [i.to_string(), fmt_f64(*v)]);
    csv_bytes(&strings(&["iteration", "objective"]), rows)
}

/// Matrix with a header row of class labels and one leading id column.
pub fn labeled_matrix_csv(corner: &str, row_ids: &[String], labels: &[i64], m: &DMatrix<f64>) -> Vec<u8> {
    let mut header = vec![corner.to_string()];
    header.extend(labels.iter().map(i64::to_string));
    let rows = (0..m.nrows()).map(|i| {
        let mut r = vec![row_ids[i].clone()];
        r.extend(m.row(i).iter().map(|v| fmt_f64(*v)));
        r
    });
    csv_bytes(&header, rows)
}
