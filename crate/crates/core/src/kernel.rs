//! Mercer kernels and Gram matrices.
//!
//! Gram entries are evaluated one pair at a time with sequential sums, so a
//! Gram matrix is bitwise reproducible regardless of caller scheduling. For
//! cross-class blocks we use `K_il := gram(Y_l, Y_i)`, i.e. rows indexed by
//! the signals of class `l` and columns by those of class `i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, check_finite_vec, col, dot};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)
)]
pub enum KernelSpec {
    Linear,
    /// `exp(-||x - y||^2 / (2 sigma^2))`
    Rbf { sigma: f64 },
    /// `(x^T y + alpha)^beta`
    Polynomial { alpha: f64, beta: u32 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { sigma } => {
                if sigma.is_finite() && sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidKernel("rbf sigma must be positive and finite"))
                }
            }
            KernelSpec::Polynomial { alpha, beta } => {
                if !alpha.is_finite() {
                    Err(Error::InvalidKernel("polynomial alpha must be finite"))
                } else if beta < 1 {
                    Err(Error::InvalidKernel("polynomial degree must be at least 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Polynomial { .. } => "polynomial",
        }
    }

    /// Kernel value without dimension or finiteness checks.
    #[inline]
    pub fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { sigma } => {
                let mut d2 = 0.0;
                for (a, b) in x.iter().zip(y) {
                    let d = a - b;
                    d2 += d * d;
                }
                libm::exp(-d2 / (2.0 * sigma * sigma))
            }
            KernelSpec::Polynomial { alpha, beta } => {
                num_traits::pow(dot(x, y) + alpha, beta as usize)
            }
        }
    }
}

impl core::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf { sigma } => write!(f, "rbf(sigma={sigma})"),
            KernelSpec::Polynomial { alpha, beta } => {
                write!(f, "polynomial(alpha={alpha},beta={beta})")
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "kernel arguments",
            expected: x.len(),
            found: y.len(),
        });
    }
    check_finite_vec(x)?;
    check_finite_vec(y)?;
    Ok(spec.apply(x, y))
}

/// Matrix of kernel values between two signal sets.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    spec: KernelSpec,
    symmetric: bool,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// `entry(i, j) = k(a[:, i], b[:, j])`. The symmetric flag is set when both
/// arguments hold the same signals, in which case only the upper triangle is
/// evaluated and mirrored.
pub fn gram(spec: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GramMatrix> {
    spec.validate()?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "gram signal dimension",
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    if core::ptr::eq(a, b) || a == b {
        return gram_symmetric(spec, a);
    }
    check_finite(a)?;
    check_finite(b)?;
    let entries = DMatrix::from_fn(a.ncols(), b.ncols(), |i, j| spec.apply(col(a, i), col(b, j)));
    Ok(GramMatrix {
        entries,
        spec: *spec,
        symmetric: false,
    })
}

pub fn gram_symmetric(spec: &KernelSpec, a: &DMatrix<f64>) -> Result<GramMatrix> {
    spec.validate()?;
    check_finite(a)?;
    let n = a.ncols();
    let mut entries = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = spec.apply(col(a, i), col(a, j));
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        entries,
        spec: *spec,
        symmetric: true,
    })
}

/// Column of kernel values `k(Y[:, l], y)` for every stored signal.
pub fn kernel_column(spec: &KernelSpec, signals: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    DVector::from_fn(signals.ncols(), |l, _| spec.apply(col(signals, l), y))
}

/// Kernel-space norm `sqrt(a^T K a)`, clamped at zero against round-off.
pub fn knorm(a: &[f64], k: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.len(), k.nrows());
    let mut q = 0.0;
    for j in 0..k.ncols() {
        q += a[j] * dot(col(k, j), a);
    }
    libm::sqrt(q.max(0.0))
}
