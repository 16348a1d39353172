//! Matrix-free access to G ≅ AᵀA.
//!
//! Every algorithm in this crate touches the operator only through
//! [`LinearOperator::apply`]. Storage backends (dense, CSR, diagonal, and the
//! Gram wrapper that forms `Aᵀ(Av)` from a rectangular `A`) all plug in here,
//! and [`OperatorHandle`] adds the unit-norm certificate and a shared
//! matrix-vector product counter.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVectorView, DVectorViewMut};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{PcpError, Result};
use crate::model::{dot, norm};

/// A square linear operator exposed only through matrix-vector products.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y ← G x`. Both slices have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// A rectangular matrix `A` that can apply itself and its transpose.
pub trait RectOperator: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn mul(&self, x: &[f64], y: &mut [f64]);
    fn mul_transpose(&self, x: &[f64], y: &mut [f64]);
}

impl RectOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn mul(&self, x: &[f64], y: &mut [f64]) {
        let xv = DVectorView::from_slice(x, self.ncols());
        let mut yv = DVectorViewMut::from_slice(y, self.nrows());
        yv.gemv(1.0, self, &xv, 0.0);
    }

    fn mul_transpose(&self, x: &[f64], y: &mut [f64]) {
        let xv = DVectorView::from_slice(x, self.nrows());
        let mut yv = DVectorViewMut::from_slice(y, self.ncols());
        yv.gemv_tr(1.0, self, &xv, 0.0);
    }
}

/// Dense symmetric G stored in full.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(PcpError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        RectOperator::mul(&self.matrix, x, y);
    }
}

/// Diagonal G; handy for scalar-reference checks.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn entries(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = di * xi;
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as (row, col, value).
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    /// Largest `|m_ij − m_ji|`; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let entries: HashMap<(usize, usize), f64> = self.triplets().map(|(r, c, v)| ((r, c), v)).collect();
        entries
            .iter()
            .map(|(&(r, c), v)| (v - entries.get(&(c, r)).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }
}

impl RectOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            *yr = self.indices[s..e]
                .iter()
                .zip(&self.values[s..e])
                .map(|(&c, v)| v * x[c])
                .sum();
        }
    }

    fn mul_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, xr) in x.iter().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k] * xr;
            }
        }
    }
}

/// A square CSR matrix used directly as G.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    matrix: CsrMatrix,
}

impl SparseOperator {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(PcpError::DimensionMismatch {
                expected: matrix.nrows,
                found: matrix.ncols,
            });
        }
        Ok(Self { matrix })
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.mul(x, y);
    }
}

/// G = AᵀA applied as `Aᵀ(A v)` without forming the product.
#[derive(Debug, Clone)]
pub struct GramOperator<M> {
    a: M,
}

impl<M: RectOperator> GramOperator<M> {
    pub fn new(a: M) -> Self {
        Self { a }
    }
}

impl<M: RectOperator> LinearOperator for GramOperator<M> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; self.a.nrows()];
        self.a.mul(x, &mut tmp);
        self.a.mul_transpose(&tmp, y);
    }
}

/// Shared handle to G: the operator, a scale factor applied to every product,
/// whether the scaled operator has certified unit spectral norm, and a
/// synchronized count of `apply` calls.
pub struct OperatorHandle {
    inner: Arc<dyn LinearOperator>,
    scale: f64,
    norm_certified: bool,
    matvecs: AtomicU64,
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dim", &self.dim())
            .field("scale", &self.scale)
            .field("norm_certified", &self.norm_certified)
            .field("matvecs", &self.matvec_count())
            .finish()
    }
}

impl OperatorHandle {
    /// Uncertified handle; the engines will refuse it.
    pub fn new(op: Arc<dyn LinearOperator>) -> Self {
        Self::build(op, 1.0, false)
    }

    /// Handle for an operator whose largest eigenvalue is known to be 1
    /// (e.g. synthetic spectra pinned by construction).
    pub fn certified(op: Arc<dyn LinearOperator>) -> Self {
        Self::build(op, 1.0, true)
    }

    /// Handle for `G / sigma1_sq` when the largest eigenvalue of `G` is known.
    pub fn with_known_norm(op: Arc<dyn LinearOperator>, sigma1_sq: f64) -> Result<Self> {
        if !(sigma1_sq.is_finite() && sigma1_sq > 0.0) {
            return Err(PcpError::InvalidConfig(format!(
                "largest eigenvalue must be positive and finite, got {sigma1_sq}"
            )));
        }
        Ok(Self::build(op, 1.0 / sigma1_sq, true))
    }

    fn build(inner: Arc<dyn LinearOperator>, scale: f64, norm_certified: bool) -> Self {
        Self {
            inner,
            scale,
            norm_certified,
            matvecs: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_norm_certified(&self) -> bool {
        self.norm_certified
    }

    /// `y ← scale · G x`; increments the counter.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        self.inner.apply(x, y);
        if self.scale != 1.0 {
            y.iter_mut().for_each(|v| *v *= self.scale);
        }
    }

    /// Number of `apply` calls since creation or the last reset.
    pub fn matvec_count(&self) -> u64 {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.matvecs.store(0, Ordering::Relaxed);
    }
}

impl LinearOperator for OperatorHandle {
    fn dim(&self) -> usize {
        OperatorHandle::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        OperatorHandle::apply(self, x, y)
    }
}

/// Deterministic start vector for power iteration.
const POWER_SEED: u64 = 0x5eed_0f_9e;

/// Rescales G so that its largest eigenvalue is 1.
///
/// Power iteration runs until successive Rayleigh quotients agree to `tol`
/// relatively, capped at 10·d iterations. Returns the certified handle for
/// G/σ₁² together with the estimate σ₁².
pub fn power_normalize(op: Arc<dyn LinearOperator>, tol: f64) -> Result<(OperatorHandle, f64)> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(PcpError::InvalidConfig(format!(
            "power iteration tolerance must lie in (0, 1e-3], got {tol}"
        )));
    }
    let d = op.dim();
    if d == 0 {
        return Err(PcpError::InvalidConfig("operator has dimension 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![0.0; d];
    op.apply(&v, &mut w);
    let mut wn = norm(&w);
    if wn == 0.0 {
        return Err(PcpError::ZeroOperator);
    }
    let mut rq = dot(&v, &w);
    let max_iter = 10 * d;
    for _ in 0..max_iter {
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
        op.apply(&v, &mut w);
        wn = norm(&w);
        if wn == 0.0 {
            return Err(PcpError::ZeroOperator);
        }
        let next = dot(&v, &w);
        if (next - rq).abs() < tol * next.abs() {
            let sigma_sq = next;
            return Ok((OperatorHandle::build(op, 1.0 / sigma_sq, true), sigma_sq));
        }
        rq = next;
    }
    Err(PcpError::NonConvergent {
        iterations: max_iter,
    })
}

fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Largest `|⟨u, Gv⟩ − ⟨Gu, v⟩|` over `trials` random unit pairs.
pub fn symmetry_defect(op: &dyn LinearOperator, trials: usize, seed: u64) -> f64 {
    let d = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gu, mut gv) = (vec![0.0; d], vec![0.0; d]);
    (0..trials)
        .map(|_| {
            let u = random_unit(&mut rng, d);
            let v = random_unit(&mut rng, d);
            op.apply(&u, &mut gu);
            op.apply(&v, &mut gv);
            (dot(&u, &gv) - dot(&gu, &v)).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest linearity defect `‖G(αu+βv) − αGu − βGv‖` over random probes,
/// measured in units of machine epsilon times `|α|‖Gu‖ + |β|‖Gv‖`.
pub fn linearity_defect(op: &dyn LinearOperator, trials: usize, seed: u64) -> f64 {
    let d = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gu, mut gv, mut gs) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    (0..trials)
        .map(|_| {
            let u = random_unit(&mut rng, d);
            let v = random_unit(&mut rng, d);
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let s: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            op.apply(&u, &mut gu);
            op.apply(&v, &mut gv);
            op.apply(&s, &mut gs);
            let defect = gs
                .iter()
                .zip(gu.iter().zip(&gv))
                .map(|(s, (x, y))| {
                    let e = s - a * x - b * y;
                    e * e
                })
                .sum::<f64>()
                .sqrt();
            let size = a.abs() * norm(&gu) + b.abs() * norm(&gv);
            if size == 0.0 {
                0.0
            } else {
                defect / (f64::EPSILON * size)
            }
        })
        .fold(0.0, f64::max)
}

/// Largest Rayleigh quotient over random probes.
pub fn max_rayleigh_probe(op: &dyn LinearOperator, trials: usize, seed: u64) -> f64 {
    let d = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gu = vec![0.0; d];
    (0..trials)
        .map(|_| {
            let u = random_unit(&mut rng, d);
            op.apply(&u, &mut gu);
            dot(&u, &gu)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
