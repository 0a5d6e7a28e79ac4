//! Model container.
//!
//! Layout (little-endian): `b"IKDM"`, `u32` version, `u64` header length,
//! a JSON header, the raw matrices as column-major `f64`, and a CRC32 of
//! every preceding byte. A linear model stores `D_i` per class. A kernel
//! model stores `A_i` followed by the training signals `Y_i` per class. The
//! per-iteration objective comes last.

use std::path::Path;

use ikdl_core::{ClassDictionaries, ClassifierModel, Dictionary, KernelClass, TrainConfig};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"IKDM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Linear,
    Kernel,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    kind: Kind,
    config: TrainConfig,
    labels: Vec<i64>,
    dim: usize,
    n_atoms: usize,
    /// Training signals per class; empty for linear models.
    class_sizes: Vec<usize>,
    objective_len: usize,
}

fn push_matrix(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_model(model: &ClassifierModel) -> Vec<u8> {
    let (kind, class_sizes) = match model.classes() {
        ClassDictionaries::Linear(_) => (Kind::Linear, Vec::new()),
        ClassDictionaries::Kernel(k) => (Kind::Kernel, k.iter().map(|c| c.signals().ncols()).collect()),
    };
    let header = Header {
        kind,
        config: model.config().clone(),
        labels: model.labels().to_vec(),
        dim: model.dim(),
        n_atoms: model.config().n_atoms,
        class_sizes,
        objective_len: model.objective().len(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    match model.classes() {
        ClassDictionaries::Linear(d) => d.iter().for_each(|d| push_matrix(&mut out, d.atoms())),
        ClassDictionaries::Kernel(k) => {
            for c in k {
                push_matrix(&mut out, c.coefs().coefs());
                push_matrix(&mut out, c.signals());
            }
        }
    }
    for v in model.objective() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.path, "model payload is shorter than its header declares"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::format(self.path, "matrix too large"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let n = rows.checked_mul(cols).ok_or_else(|| Error::format(self.path, "matrix too large"))?;
        Ok(DMatrix::from_vec(rows, cols, self.f64s(n)?))
    }
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<ClassifierModel> {
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(Error::format(path, "not a model file"));
    }
    if bytes.len() < 20 {
        return Err(Error::Checksum { path: path.to_path_buf() });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::Checksum { path: path.to_path_buf() });
    }
    let version = u32::from_le_bytes(body[4..8].try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let header_len = u64::from_le_bytes(body[8..16].try_into().unwrap());
    let mut cur = Cursor { bytes: body, pos: 16, path };
    let header_len = usize::try_from(header_len).map_err(|_| Error::format(path, "header too large"))?;
    let header: Header = serde_json::from_slice(cur.take(header_len)?)
        .map_err(|e| Error::format(path, format!("bad model header: {e}")))?;
    let c = header.labels.len();
    let classes = match header.kind {
        Kind::Linear => {
            let mut dicts = Vec::with_capacity(c);
            for _ in 0..c {
                dicts.push(Dictionary::new(cur.matrix(header.dim, header.n_atoms)?)?);
            }
            ClassDictionaries::Linear(dicts)
        }
        Kind::Kernel => {
            let spec = header
                .config
                .kernel
                .ok_or_else(|| Error::format(path, "kernel model without a kernel"))?;
            if header.class_sizes.len() != c {
                return Err(Error::format(path, "class sizes do not match labels"));
            }
            let mut kc = Vec::with_capacity(c);
            for &n in &header.class_sizes {
                let coefs = cur.matrix(n, header.n_atoms)?;
                let signals = cur.matrix(header.dim, n)?;
                kc.push(KernelClass::new(&spec, coefs, signals)?);
            }
            ClassDictionaries::Kernel(kc)
        }
    };
    let objective = cur.f64s(header.objective_len)?;
    if cur.pos != body.len() {
        return Err(Error::format(path, "trailing bytes after model payload"));
    }
    Ok(ClassifierModel::from_parts(header.config, header.labels, classes, objective)?)
}

pub fn load_model(path: &Path) -> Result<ClassifierModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}
