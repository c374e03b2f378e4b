//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. All rank, kernel and
//! positivity decisions go through a single [`ToleranceConfig`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PovmError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Thresholds used for every floating-point decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Relative singular-value cut for rank decisions.
    pub rank_rel_tol: f64,
    /// Absolute per-entry tolerance for equalities.
    pub equality_abs_tol: f64,
    /// Relative eigenvalue floor (negative) for positivity checks.
    pub psd_eig_floor: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_rel_tol: 1e-10,
            equality_abs_tol: 1e-9,
            psd_eig_floor: -1e-10,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rank_rel_tol > 0.0
            && self.rank_rel_tol.is_finite()
            && self.equality_abs_tol > 0.0
            && self.equality_abs_tol.is_finite()
            && self.psd_eig_floor < 0.0
            && self.psd_eig_floor > -1e-2;
        if ok {
            Ok(())
        } else {
            Err(PovmError::InvalidInput(format!("bad tolerance configuration {self:?}")))
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue modulus (operator norm of the input).
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            out += (&v * v.adjoint()) * c(lambda, 0.0);
        }
        out
    }
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(PovmError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn is_hermitian(m: &CMatrix, tol: &ToleranceConfig) -> bool {
    m.is_square() && hermitian_asymmetry(m) <= tol.equality_abs_tol
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Spectral decomposition of a Hermitian matrix.
///
/// The input is symmetrized before factoring; asymmetry beyond
/// `equality_abs_tol` is rejected.
pub fn hermitian_eig(m: &CMatrix, tol: &ToleranceConfig) -> Result<HermitianEigen> {
    let n = ensure_square(m)?;
    let asym = hermitian_asymmetry(m);
    if asym > tol.equality_abs_tol {
        return Err(PovmError::NotHermitian { asymmetry: asym });
    }
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let sym = hermitian_part(m);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigen-decomposition of the Hermitian dilation [[0, M], [M*, 0]], whose
/// eigenvalues are ±σ_k plus |rows - cols| zeros. Used instead of a direct
/// SVD, which is unreliable on some Hermitian inputs in the backing library.
fn dilation_eig(m: &CMatrix) -> HermitianEigen {
    let (r, c) = m.shape();
    let mut d = CMatrix::zeros(r + c, r + c);
    d.view_mut((0, r), (r, c)).copy_from(m);
    d.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
    let t = ToleranceConfig { equality_abs_tol: f64::INFINITY, ..Default::default() };
    hermitian_eig(&d, &t).expect("dilations are Hermitian")
}

/// Singular values, in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return vec![];
    }
    let eig = dilation_eig(m);
    eig.values.iter().rev().take(k).map(|&s| s.max(0.0)).collect()
}

fn rank_threshold(rows: usize, cols: usize, sigma_max: f64, tol: &ToleranceConfig) -> f64 {
    tol.rank_rel_tol * rows.max(cols) as f64 * sigma_max
}

/// Number of singular values above `rank_rel_tol * max(rows, cols) * sigma_max`.
pub fn numerical_rank(m: &CMatrix, tol: &ToleranceConfig) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let cut = rank_threshold(m.nrows(), m.ncols(), smax, tol);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal bases of the range and of the kernel.
struct Split {
    range: CMatrix,
    kernel: CMatrix,
}

fn normalized_part(v: nalgebra::DVectorView<'_, C64>) -> nalgebra::DVector<C64> {
    let n = v.norm();
    v.into_owned() / c(n, 0.0)
}

fn svd_split(m: &CMatrix, tol: &ToleranceConfig) -> Split {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Split { range: CMatrix::zeros(rows, 0), kernel: CMatrix::zeros(0, 0) };
    }
    if rows == 0 {
        return Split { range: CMatrix::zeros(0, 0), kernel: CMatrix::identity(cols, cols) };
    }
    let eig = dilation_eig(m);
    let n = rows + cols;
    let smax = eig.values[n - 1].max(0.0);
    let cut = rank_threshold(rows, cols, smax, tol);
    // Eigenvectors (u; v)/sqrt2 for +σ; u and v parts are orthogonal families.
    let keep: Vec<usize> = (0..n).rev().take(rows.min(cols)).filter(|&k| smax > 0.0 && eig.values[k] > cut).collect();
    let mut range = CMatrix::zeros(rows, keep.len());
    let mut row_space = CMatrix::zeros(cols, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        let w = eig.vectors.column(k);
        range.set_column(j, &normalized_part(w.rows(0, rows)));
        row_space.set_column(j, &normalized_part(w.rows(rows, cols)));
    }
    let complement = CMatrix::identity(cols, cols) - &row_space * row_space.adjoint();
    let t = ToleranceConfig { equality_abs_tol: f64::INFINITY, ..Default::default() };
    let ce = hermitian_eig(&hermitian_part(&complement), &t).expect("Hermitian");
    let nk = cols - keep.len();
    let kernel = ce.vectors.columns(cols - nk, nk).into_owned();
    Split { range, kernel }
}

/// Orthonormal basis of the kernel, as columns (possibly zero columns).
pub fn kernel_basis(m: &CMatrix, tol: &ToleranceConfig) -> CMatrix {
    svd_split(m, tol).kernel
}

/// Orthonormal basis of the column space, as columns.
pub fn column_space(m: &CMatrix, tol: &ToleranceConfig) -> CMatrix {
    svd_split(m, tol).range
}

/// Orthonormal eigenvectors of a Hermitian PSD matrix whose eigenvalues
/// clear the rank threshold.
pub fn hermitian_range(m: &CMatrix, tol: &ToleranceConfig) -> Result<(CMatrix, Vec<f64>)> {
    range_above(m, tol, 0.0)
}

/// Range of an effect. The rank cut is taken relative to max(||M||, 1), since
/// effects live at the scale of the identity; round-off zeros get rank 0.
pub fn effect_range(m: &CMatrix, tol: &ToleranceConfig) -> Result<(CMatrix, Vec<f64>)> {
    range_above(m, tol, 1.0)
}

pub fn effect_rank(m: &CMatrix, tol: &ToleranceConfig) -> usize {
    effect_range(m, tol).map_or_else(|_| numerical_rank(m, tol), |(b, _)| b.ncols())
}

fn range_above(m: &CMatrix, tol: &ToleranceConfig, scale_floor: f64) -> Result<(CMatrix, Vec<f64>)> {
    let eig = hermitian_eig(m, tol)?;
    let n = eig.values.len();
    let top = eig.spectral_radius();
    let cut = tol.rank_rel_tol * n as f64 * top.max(scale_floor);
    let keep: Vec<usize> = (0..n).rev().filter(|&k| top > 0.0 && eig.values[k] > cut).collect();
    let mut basis = CMatrix::zeros(n, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        basis.set_column(j, &eig.vectors.column(k));
    }
    Ok((basis, keep.iter().map(|&k| eig.values[k]).collect()))
}

/// Hermitian X with X·M·X = identity, for Hermitian positive definite M.
pub fn inv_sqrt_psd(m: &CMatrix, tol: &ToleranceConfig) -> Result<CMatrix> {
    let eig = hermitian_eig(m, tol)?;
    let norm = eig.spectral_radius();
    let lmin = eig.min();
    if eig.values.is_empty() {
        return Ok(CMatrix::zeros(0, 0));
    }
    if !(lmin > tol.rank_rel_tol * norm) {
        return Err(PovmError::Singular { min_eigenvalue: lmin });
    }
    Ok(spectral_map(&eig, |l| 1.0 / l.sqrt()))
}

/// Applies `f` to the eigenvalues of a Hermitian decomposition.
pub fn spectral_map(eig: &HermitianEigen, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = eig.values.len();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(k);
        out += (&v * v.adjoint()) * c(f(lambda), 0.0);
    }
    out
}

/// Kronecker product; block (i, j) equals `a[(i, j)] * b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn is_psd(m: &CMatrix, tol: &ToleranceConfig) -> Result<bool> {
    ensure_square(m)?;
    if !is_hermitian(m, tol) {
        return Ok(false);
    }
    let eig = hermitian_eig(m, tol)?;
    Ok(eig.min() >= psd_floor(&eig, tol))
}

pub fn is_effect(m: &CMatrix, tol: &ToleranceConfig) -> Result<bool> {
    ensure_square(m)?;
    if !is_hermitian(m, tol) {
        return Ok(false);
    }
    let eig = hermitian_eig(m, tol)?;
    Ok(eig.min() >= psd_floor(&eig, tol) && eig.max() <= 1.0 + tol.psd_eig_floor.abs())
}

pub fn is_projector(m: &CMatrix, tol: &ToleranceConfig) -> Result<bool> {
    ensure_square(m)?;
    Ok(is_hermitian(m, tol) && max_abs_diff(&(m * m), m) <= tol.equality_abs_tol)
}

/// Eigenvalue floor for positivity; effects are measured against the
/// identity scale so round-off on near-zero effects does not fail them.
pub(crate) fn psd_floor(eig: &HermitianEigen, tol: &ToleranceConfig) -> f64 {
    tol.psd_eig_floor * eig.spectral_radius().max(1.0)
}

/// Orthogonal projector onto the span of the columns of `basis`.
pub fn projector_onto(basis: &CMatrix, tol: &ToleranceConfig) -> CMatrix {
    let q = column_space(basis, tol);
    &q * q.adjoint()
}

/// Row-major vectorization into a column of length rows*cols.
pub fn vectorize(m: &CMatrix) -> nalgebra::DVector<C64> {
    let (r, cl) = m.shape();
    nalgebra::DVector::from_fn(r * cl, |k, _| m[(k / cl, k % cl)])
}

pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Hilbert–Schmidt inner product Tr(A* B).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut cl) = (0, 0);
    for b in blocks {
        out.view_mut((r, cl), b.shape()).copy_from(*b);
        r += b.nrows();
        cl += b.ncols();
    }
    out
}

/// Coefficients of det(x·1 − M), lowest degree first, leading coefficient 1.
///
/// Faddeev–LeVerrier recursion; fine for the small matrices used here.
pub fn char_poly(m: &CMatrix) -> Result<Vec<C64>> {
    let n = ensure_square(m)?;
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = ONE;
    let mut mk = CMatrix::zeros(n, n);
    let id = CMatrix::identity(n, n);
    for k in 1..=n {
        mk = m * (&mk + &id * coeffs[n - k + 1]);
        coeffs[n - k] = -mk.trace() / c(k as f64, 0.0);
    }
    Ok(coeffs)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}
