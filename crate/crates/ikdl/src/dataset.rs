//! Dataset files.
//!
//! Two formats are supported:
//!
//! * CSV: one signal per column, comma separated, no header row, plus a
//!   labels file with one integer class id per line.
//! * Binary: `b"IKDL"`, a `u32` format version, `m` and `N` as `u64`, the
//!   `m x N` signal matrix as column-major `f64`, then `N` labels as `u32`.
//!   Every number is little-endian.
//!
//! Non-finite entries are rejected with their zero-based matrix position.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ikdl_core::{DataWarning, LabeledDataset};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"IKDL";
pub const DATASET_VERSION: u32 = 1;
const BINARY_HEADER: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Binary,
}

impl DatasetFormat {
    /// `.csv` and `.txt` are CSV, `.bin` and `.ikdl` are binary.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "csv" | "txt" => Ok(DatasetFormat::Csv),
            "bin" | "ikdl" => Ok(DatasetFormat::Binary),
            _ => Err(Error::format(path, "unknown dataset format; name the format explicitly")),
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(DatasetFormat::Csv),
            "binary" | "bin" => Ok(DatasetFormat::Binary),
            _ => Err(format!("unknown dataset format `{s}` (expected csv or binary)")),
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = read_file(path)?;
    parse_matrix_csv(&bytes, path)
}

pub fn parse_matrix_csv(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if let Some(first) = rows.first() {
            if record.len() != first.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    field: record.len().min(first.len()) + 1,
                    msg: format!("expected {} fields, found {}", first.len(), record.len()),
                });
            }
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                field: j + 1,
                msg: format!("`{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    path: path.to_path_buf(),
                    row: rows.len(),
                    col: j,
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::format(path, "empty matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
}

pub fn write_matrix_csv(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(m[(i, j)]));
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::format(path, "labels file is not UTF-8"))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            field: 1,
            msg: format!("`{line}` is not an integer label"),
        })?);
    }
    Ok(labels)
}

pub fn write_labels(labels: &[i64]) -> Vec<u8> {
    let mut out = String::new();
    for l in labels {
        writeln!(out, "{l}").unwrap();
    }
    out.into_bytes()
}

pub fn encode_binary(signals: &DMatrix<f64>, labels: &[u32]) -> Vec<u8> {
    assert_eq!(signals.ncols(), labels.len());
    let mut out = Vec::with_capacity(BINARY_HEADER + 8 * signals.len() + 4 * labels.len());
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(signals.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(signals.ncols() as u64).to_le_bytes());
    for v in signals.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<(DMatrix<f64>, Vec<u32>)> {
    if bytes.len() < BINARY_HEADER || &bytes[..4] != DATASET_MAGIC {
        return Err(Error::format(path, "not a binary dataset file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATASET_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: version,
            expected: DATASET_VERSION,
        });
    }
    let m = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let n = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = m
        .checked_mul(n)
        .and_then(|mn| mn.checked_mul(8))
        .and_then(|b| b.checked_add(n.checked_mul(4)?))
        .and_then(|b| b.checked_add(BINARY_HEADER as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(Error::format(
            path,
            format!("size mismatch for a {m} x {n} dataset: file has {} bytes", bytes.len()),
        ));
    }
    let (m, n) = (m as usize, n as usize);
    if m == 0 || n == 0 {
        return Err(Error::format(path, "empty matrix"));
    }
    let mut values = Vec::with_capacity(m * n);
    for (k, chunk) in bytes[BINARY_HEADER..BINARY_HEADER + 8 * m * n].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite {
                path: path.to_path_buf(),
                row: k % m,
                col: k / m,
            });
        }
        values.push(v);
    }
    let labels = bytes[BINARY_HEADER + 8 * m * n..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((DMatrix::from_vec(m, n, values), labels))
}

/// Signals and raw labels, without remapping.
pub fn load_raw(signals: &Path, labels: Option<&Path>, format: DatasetFormat) -> Result<(DMatrix<f64>, Vec<i64>)> {
    let (matrix, raw) = match format {
        DatasetFormat::Csv => {
            let labels = labels.ok_or_else(|| Error::format(signals, "CSV datasets need a labels file"))?;
            (read_matrix_csv(signals)?, read_labels(labels)?)
        }
        DatasetFormat::Binary => {
            let (m, l) = decode_binary(&read_file(signals)?, signals)?;
            if labels.is_some() {
                log::warn!("ignoring separate labels file for binary dataset {}", signals.display());
            }
            (m, l.into_iter().map(i64::from).collect())
        }
    };
    if raw.len() != matrix.ncols() {
        return Err(Error::format(
            labels.unwrap_or(signals),
            format!("{} labels for {} signals", raw.len(), matrix.ncols()),
        ));
    }
    Ok((matrix, raw))
}

pub fn load_dataset(
    signals: &Path,
    labels: Option<&Path>,
    format: DatasetFormat,
) -> Result<(LabeledDataset, Vec<DataWarning>)> {
    let (matrix, raw) = load_raw(signals, labels, format)?;
    Ok(LabeledDataset::from_raw(matrix, &raw)?)
}

/// Original label of every column.
pub fn raw_labels(ds: &LabeledDataset) -> Vec<i64> {
    ds.labels().iter().map(|&c| ds.class_labels()[c]).collect()
}

/// Binary encoding of a dataset; labels must fit in `u32`.
pub fn encode_dataset(ds: &LabeledDataset, path: &Path) -> Result<Vec<u8>> {
    let labels = raw_labels(ds)
        .into_iter()
        .map(|l| u32::try_from(l).map_err(|_| Error::format(path, format!("label {l} does not fit the binary format"))))
        .collect::<Result<Vec<u32>>>()?;
    Ok(encode_binary(ds.signals(), &labels))
}
