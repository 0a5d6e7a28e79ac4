//! Greedy sparse coders: OMP on an explicit dictionary and Kernel OMP on
//! Gram quantities only.
//!
//! Both coders pick, at every step, the unselected atom with the largest
//! absolute correlation with the current residual (lowest index on ties) and
//! then re-solve least squares on the whole support through an incrementally
//! grown Cholesky factor. A step whose best unselected correlation does not
//! exceed the largest correlation left on an already-selected atom would
//! amount to re-selecting that atom; the coder stops there.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{check_finite_vec, col, col_mut, dot, psd_jitter, SupportFactor};

/// Maximum allowed deviation of an atom norm from one.
pub const UNIT_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseCode {
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    /// Coefficients aligned with `support`.
    pub values: Vec<f64>,
    /// Squared residual norm of the final approximation.
    pub residual_sq: f64,
    /// Squared residual norm after each accepted greedy step.
    pub path: Vec<f64>,
    /// Candidates rejected as linearly dependent on the support.
    pub dropped: u32,
    /// Whether the support Gram needed diagonal jitter.
    pub jittered: bool,
}

impl SparseCode {
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn to_dense(&self, n_atoms: usize) -> Vec<f64> {
        let mut x = vec![0.0; n_atoms];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }
}

/// Residual stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Stop on the sparsity budget only.
    BudgetOnly,
    Absolute(f64),
    /// Multiple of the signal norm (`sqrt(k(y, y))` for kernel coding).
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoderConfig {
    pub sparsity: usize,
    pub tolerance: Tolerance,
}

impl CoderConfig {
    /// Budget-only coding, as used inside the training loops.
    pub fn training(sparsity: usize) -> Self {
        CoderConfig {
            sparsity,
            tolerance: Tolerance::BudgetOnly,
        }
    }

    /// Coding used at classification time.
    pub fn classification(sparsity: usize) -> Self {
        CoderConfig {
            sparsity,
            tolerance: Tolerance::Relative(1e-6),
        }
    }

    pub fn eps_for(&self, signal_norm: f64) -> f64 {
        match self.tolerance {
            Tolerance::BudgetOnly => 0.0,
            Tolerance::Absolute(e) => e,
            Tolerance::Relative(r) => r * signal_norm,
        }
    }
}

fn check_budget(s: usize, n: usize, eps: f64) -> Result<()> {
    if s == 0 || s > n {
        return Err(Error::InvalidConfig(alloc::format!(
            "sparsity {s} must lie in 1..={n}"
        )));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "residual tolerance {eps} must be non-negative"
        )));
    }
    Ok(())
}

pub(crate) fn check_unit_atoms(d: &DMatrix<f64>) -> Result<()> {
    for j in 0..d.ncols() {
        let norm = libm::sqrt(dot(col(d, j), col(d, j)));
        if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
            return Err(Error::NonUnitAtom { atom: j, norm });
        }
    }
    Ok(())
}

/// Index of the largest `|corr|` over candidates, lowest index on ties.
fn pick(corr: &[f64], excluded: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in corr.iter().enumerate() {
        if excluded[j] {
            continue;
        }
        let a = c.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((j, a));
        }
    }
    best
}

/// Adds `k` to the support, retrying once with jitter. Returns `false` if the
/// atom had to be dropped.
fn grow<F>(factor: &mut SupportFactor, support: &[usize], k: usize, gram: F) -> bool
where
    F: Fn(usize, usize) -> f64,
{
    let cross: Vec<f64> = support.iter().map(|&j| gram(k, j)).collect();
    if factor.push(&cross, gram(k, k)) {
        return true;
    }
    if factor.jittered() {
        return false;
    }
    let mut ext: Vec<usize> = support.to_vec();
    ext.push(k);
    let size = ext.len();
    let g = DMatrix::from_fn(size, size, |i, j| gram(ext[i], ext[j]));
    let jitter = psd_jitter(&g);
    jitter > 0.0 && factor.refactor(size, jitter, |i, j| g[(i, j)])
}

/// Orthogonal Matching Pursuit of `y` over the unit-norm columns of `d`.
pub fn omp(d: &DMatrix<f64>, y: &[f64], s: usize, eps: f64) -> Result<SparseCode> {
    if d.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "omp signal length",
            expected: d.nrows(),
            found: y.len(),
        });
    }
    check_budget(s, d.ncols(), eps)?;
    check_unit_atoms(d)?;
    check_finite_vec(y)?;
    Ok(omp_unchecked(d, y, s, eps))
}

pub(crate) fn omp_unchecked(d: &DMatrix<f64>, y: &[f64], s: usize, eps: f64) -> SparseCode {
    let n = d.ncols();
    let mut code = SparseCode::default();
    let mut excluded = vec![false; n];
    let mut factor = SupportFactor::with_capacity(s);
    let mut rhs: Vec<f64> = Vec::with_capacity(s);
    let mut r = y.to_vec();
    let mut corr = vec![0.0; n];
    let mut res_sq = dot(&r, &r);
    let atom_dot = |i: usize, j: usize| dot(col(d, i), col(d, j));

    while code.support.len() < s && libm::sqrt(res_sq) > eps {
        for (j, c) in corr.iter_mut().enumerate() {
            *c = dot(col(d, j), &r);
        }
        let Some((k, best)) = pick(&corr, &excluded) else {
            break;
        };
        let held = code.support.iter().map(|&j| corr[j].abs()).fold(0.0, f64::max);
        if !(best > held) {
            break;
        }
        excluded[k] = true;
        if !grow(&mut factor, &code.support, k, atom_dot) {
            code.dropped += 1;
            continue;
        }
        code.support.push(k);
        rhs.push(dot(col(d, k), y));
        code.values = factor.solve(&rhs);
        r.copy_from_slice(y);
        for (&j, &v) in code.support.iter().zip(&code.values) {
            crate::linalg::axpy(-v, col(d, j), &mut r);
        }
        res_sq = dot(&r, &r);
        code.path.push(res_sq);
    }
    code.residual_sq = res_sq;
    code.jittered = factor.jittered();
    code
}

/// Kernel OMP. `g` is the atom Gram `A^T K A`, `p` the correlations
/// `A^T k(Y, y)` and `kyy = k(y, y)`.
pub fn komp(g: &DMatrix<f64>, p: &[f64], kyy: f64, s: usize, eps: f64) -> Result<SparseCode> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "komp atom gram",
            expected: n,
            found: g.ncols(),
        });
    }
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            context: "komp correlations",
            expected: n,
            found: p.len(),
        });
    }
    check_budget(s, n, eps)?;
    check_finite_vec(p)?;
    if !kyy.is_finite() || kyy < -1e-10 {
        return Err(Error::NegativeSelfSimilarity(kyy));
    }
    Ok(komp_unchecked(g, p, kyy, s, eps))
}

pub(crate) fn komp_unchecked(g: &DMatrix<f64>, p: &[f64], kyy: f64, s: usize, eps: f64) -> SparseCode {
    let n = g.nrows();
    let mut code = SparseCode::default();
    let mut excluded = vec![false; n];
    let mut factor = SupportFactor::with_capacity(s);
    let mut rhs: Vec<f64> = Vec::with_capacity(s);
    let mut corr = p.to_vec();
    let mut res_sq = kyy.max(0.0);
    let eps_sq = eps * eps;
    let entry = |i: usize, j: usize| g[(i, j)];

    while code.support.len() < s && res_sq > eps_sq {
        let Some((k, best)) = pick(&corr, &excluded) else {
            break;
        };
        let held = code.support.iter().map(|&j| corr[j].abs()).fold(0.0, f64::max);
        if !(best > held) {
            break;
        }
        excluded[k] = true;
        if !grow(&mut factor, &code.support, k, entry) {
            code.dropped += 1;
            continue;
        }
        code.support.push(k);
        rhs.push(p[k]);
        code.values = factor.solve(&rhs);

        // corr = p - G[:, S] x_S
        corr.copy_from_slice(p);
        for (&j, &v) in code.support.iter().zip(&code.values) {
            crate::linalg::axpy(-v, col(g, j), &mut corr);
        }
        // kyy - 2 p_S^T x_S + x_S^T G_SS x_S
        let mut quad = 0.0;
        for (a, &i) in code.support.iter().enumerate() {
            let mut row = 0.0;
            for (b, &j) in code.support.iter().enumerate() {
                row += g[(i, j)] * code.values[b];
            }
            quad += code.values[a] * row;
        }
        let lin = dot(&rhs, &code.values);
        res_sq = (kyy - 2.0 * lin + quad).max(0.0);
        code.path.push(res_sq);
    }
    code.residual_sq = res_sq;
    code.jittered = factor.jittered();
    code
}

/// Dense `n x N` representation matrix whose columns hold sparse codes.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodeMatrix {
    coefs: DMatrix<f64>,
}

impl SparseCodeMatrix {
    pub fn zeros(n_atoms: usize, n_signals: usize) -> Self {
        SparseCodeMatrix {
            coefs: DMatrix::zeros(n_atoms, n_signals),
        }
    }

    pub fn from_dense(coefs: DMatrix<f64>) -> Self {
        SparseCodeMatrix { coefs }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.coefs
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.coefs
    }

    pub fn n_atoms(&self) -> usize {
        self.coefs.nrows()
    }

    pub fn n_signals(&self) -> usize {
        self.coefs.ncols()
    }

    pub fn set_column(&mut self, l: usize, code: &SparseCode) {
        let c = col_mut(&mut self.coefs, l);
        c.fill(0.0);
        for (&j, &v) in code.support.iter().zip(&code.values) {
            c[j] = v;
        }
    }

    /// Signals whose code uses atom `j`, in ascending order.
    pub fn row_support(&self, j: usize) -> Vec<usize> {
        (0..self.coefs.ncols()).filter(|&l| self.coefs[(j, l)] != 0.0).collect()
    }

    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.coefs[(j, l)]
    }

    pub fn set(&mut self, j: usize, l: usize, v: f64) {
        self.coefs[(j, l)] = v;
    }

    pub fn column_nnz(&self, l: usize) -> usize {
        col(&self.coefs, l).iter().filter(|v| **v != 0.0).count()
    }

    pub fn max_column_nnz(&self) -> usize {
        (0..self.n_signals()).map(|l| self.column_nnz(l)).max().unwrap_or(0)
    }
}

/// Codes every column of `signals` with [`omp`].
pub fn batch_omp(d: &DMatrix<f64>, signals: &DMatrix<f64>, cfg: &CoderConfig) -> Result<SparseCodeMatrix> {
    batch_omp_report(d, signals, cfg).map(|(codes, _)| codes)
}

/// Aggregate diagnostics from a batch of codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BatchStats {
    pub dropped: u64,
    pub jittered: u64,
}

pub fn batch_omp_report(
    d: &DMatrix<f64>,
    signals: &DMatrix<f64>,
    cfg: &CoderConfig,
) -> Result<(SparseCodeMatrix, BatchStats)> {
    if d.nrows() != signals.nrows() {
        return Err(Error::DimensionMismatch {
            context: "batch signal dimension",
            expected: d.nrows(),
            found: signals.nrows(),
        });
    }
    check_budget(cfg.sparsity, d.ncols(), cfg.eps_for(0.0))?;
    check_unit_atoms(d)?;
    let mut out = SparseCodeMatrix::zeros(d.ncols(), signals.ncols());
    let mut stats = BatchStats::default();
    for l in 0..signals.ncols() {
        let y = col(signals, l);
        check_finite_vec(y).map_err(|e| e.at_column(l))?;
        let eps = cfg.eps_for(libm::sqrt(dot(y, y)));
        let code = omp_unchecked(d, y, cfg.sparsity, eps);
        stats.dropped += u64::from(code.dropped);
        stats.jittered += u64::from(code.jittered);
        out.set_column(l, &code);
    }
    Ok((out, stats))
}

/// Codes every column of `correlations` (`A^T k(Y, y_l)`) with [`komp`].
pub fn batch_komp(
    g: &DMatrix<f64>,
    correlations: &DMatrix<f64>,
    self_sims: &[f64],
    cfg: &CoderConfig,
) -> Result<SparseCodeMatrix> {
    batch_komp_report(g, correlations, self_sims, cfg).map(|(codes, _)| codes)
}

pub fn batch_komp_report(
    g: &DMatrix<f64>,
    correlations: &DMatrix<f64>,
    self_sims: &[f64],
    cfg: &CoderConfig,
) -> Result<(SparseCodeMatrix, BatchStats)> {
    if correlations.ncols() != self_sims.len() {
        return Err(Error::DimensionMismatch {
            context: "batch self-similarities",
            expected: correlations.ncols(),
            found: self_sims.len(),
        });
    }
    let mut out = SparseCodeMatrix::zeros(g.nrows(), correlations.ncols());
    let mut stats = BatchStats::default();
    for l in 0..correlations.ncols() {
        let kyy = self_sims[l];
        let eps = cfg.eps_for(libm::sqrt(kyy.max(0.0)));
        let code = komp(g, col(correlations, l), kyy, cfg.sparsity, eps).map_err(|e| e.at_column(l))?;
        stats.dropped += u64::from(code.dropped);
        stats.jittered += u64::from(code.jittered);
        out.set_column(l, &code);
    }
    Ok((out, stats))
}
