//! Extremality of observables.
//!
//! An observable is extremal iff the operators |iμ><iν| built from bases of
//! the effect ranges are linearly independent, i.e. iff their Gram matrix
//! (the "super Gram matrix" H) is invertible. This module builds H, decides
//! invertibility, extracts a perturbation witness when it fails, and carries
//! an independent brute-force oracle for the same question.

use nalgebra::DMatrix;

use crate::error::{PovmError, Result};
use crate::matcore::{
    self, c, hermitian_eig, hermitian_range, kron, max_abs_diff, CMatrix, ToleranceConfig, I,
};
use crate::observable::{Observable, RankOneForm};

/// Gram matrix of the operator family {|iμ><iν|}.
#[derive(Debug, Clone)]
pub struct SuperGramMatrix {
    entries: CMatrix,
    dims: Vec<usize>,
    bases: Vec<CMatrix>,
}

impl SuperGramMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Range dimension d_i per outcome.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Basis vectors |iμ> (as columns) used for each outcome.
    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    /// D = sum of d_i^2.
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Row/column index of (i, μ, ν).
    pub fn index(&self, i: usize, mu: usize, nu: usize) -> usize {
        let offset: usize = self.dims[..i].iter().map(|d| d * d).sum();
        offset + mu * self.dims[i] + nu
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_values(&self.entries)
    }
}

/// Extremality decision for one observable.
#[derive(Debug, Clone)]
pub struct ExtremalityVerdict {
    pub extremal: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Cut used for invertibility: rank_rel_tol * D * max_eigenvalue.
    pub threshold: f64,
    /// A nonzero perturbation D with sum 0, D_i supported on ran(A_i), and
    /// A ± D valid observables. Present iff not extremal.
    pub witness: Option<Vec<CMatrix>>,
}

impl ExtremalityVerdict {
    /// min_eigenvalue / threshold; values near 1 are borderline.
    pub fn margin(&self) -> f64 {
        if self.threshold > 0.0 {
            self.min_eigenvalue / self.threshold
        } else {
            f64::INFINITY
        }
    }
}

fn eig_values(m: &CMatrix) -> Vec<f64> {
    let tol = ToleranceConfig { equality_abs_tol: 1e-6 * matcore::max_abs(m).max(1.0), ..Default::default() };
    hermitian_eig(m, &tol).expect("Gram matrices are Hermitian by construction").values
}

/// Operator-family Gram matrix for arbitrary (not necessarily orthonormal) bases.
///
/// Block (i, j) is kron(a_ij, conj(a_ij)) with (a_ij)_{μκ} = <iμ|jκ>.
pub fn super_gram_from_bases(bases: &[CMatrix]) -> CMatrix {
    cross_gram(bases, bases)
}

/// Block matrix with blocks kron(a_ij, conj(b_ij)), a from `left`, b from `right`.
/// With left == right this is the super Gram matrix; otherwise it is the
/// cross block of a direct sum.
pub fn cross_gram(left: &[CMatrix], right: &[CMatrix]) -> CMatrix {
    assert_eq!(left.len(), right.len(), "cross_gram: outcome count mismatch");
    let sizes: Vec<usize> = left.iter().zip(right).map(|(a, b)| a.ncols() * b.ncols()).collect();
    let total: usize = sizes.iter().sum();
    let mut out = CMatrix::zeros(total, total);
    let mut row = 0;
    for i in 0..left.len() {
        let mut col = 0;
        for j in 0..left.len() {
            if sizes[i] > 0 && sizes[j] > 0 {
                let a = left[i].adjoint() * &left[j];
                let b = (right[i].adjoint() * &right[j]).map(|z| z.conj());
                out.view_mut((row, col), (sizes[i], sizes[j])).copy_from(&kron(&a, &b));
            }
            col += sizes[j];
        }
        row += sizes[i];
    }
    out
}

/// Orthonormal eigenvector bases of ran(A_i); zero effects get an empty basis.
pub fn range_bases(obs: &Observable, tol: &ToleranceConfig) -> Vec<CMatrix> {
    obs.effects()
        .iter()
        .map(|e| matcore::effect_range(e, tol).expect("validated effects are Hermitian").0)
        .collect()
}

/// Super Gram matrix of an observable. Default bases are orthonormal
/// eigenvectors; explicit bases must span each range with exactly d_i vectors.
pub fn super_gram(
    obs: &Observable,
    basis_choice: Option<&[CMatrix]>,
    tol: &ToleranceConfig,
) -> Result<SuperGramMatrix> {
    let bases = match basis_choice {
        None => range_bases(obs, tol),
        Some(given) => {
            if given.len() != obs.outcomes() {
                return Err(PovmError::OutcomeCountMismatch { left: obs.outcomes(), right: given.len() });
            }
            let defaults = range_bases(obs, tol);
            for (i, (b, d)) in given.iter().zip(&defaults).enumerate() {
                if b.nrows() != obs.dim() || b.ncols() != d.ncols() {
                    return Err(PovmError::BadBasis { index: i });
                }
                if b.ncols() == 0 {
                    continue;
                }
                if matcore::numerical_rank(b, tol) != b.ncols() {
                    return Err(PovmError::BadBasis { index: i });
                }
                // Every supplied vector must lie in ran(A_i).
                let proj = d * d.adjoint();
                let leak = b - &proj * b;
                let scale = b.norm().max(1.0);
                if matcore::max_abs(&leak) > 1e3 * tol.equality_abs_tol * scale {
                    return Err(PovmError::BadBasis { index: i });
                }
            }
            given.to_vec()
        }
    };
    let dims = bases.iter().map(|b| b.ncols()).collect();
    Ok(SuperGramMatrix { entries: super_gram_from_bases(&bases), dims, bases })
}

fn invertibility(m: &CMatrix, tol: &ToleranceConfig) -> (bool, f64, f64, f64) {
    let values = eig_values(m);
    let lmin = values.first().copied().unwrap_or(0.0);
    let lmax = values.last().copied().unwrap_or(0.0);
    let threshold = tol.rank_rel_tol * m.nrows() as f64 * lmax;
    (lmax > 0.0 && lmin > threshold, lmin, lmax, threshold)
}

/// Decides extremality by invertibility of the super Gram matrix, and builds a
/// witness perturbation from a kernel vector when it is singular.
pub fn is_extremal(obs: &Observable, tol: &ToleranceConfig) -> ExtremalityVerdict {
    let h = super_gram(obs, None, tol).expect("default bases are always valid");
    let (extremal, lmin, lmax, threshold) = invertibility(h.entries(), tol);
    let witness = if extremal { None } else { Some(witness_from_kernel(obs, &h, tol)) };
    ExtremalityVerdict { extremal, min_eigenvalue: lmin, max_eigenvalue: lmax, threshold, witness }
}

fn witness_from_kernel(obs: &Observable, h: &SuperGramMatrix, tol: &ToleranceConfig) -> Vec<CMatrix> {
    let eig = hermitian_eig(h.entries(), &ToleranceConfig { equality_abs_tol: 1e-6, ..*tol })
        .expect("Gram matrices are Hermitian by construction");
    let coeffs = eig.vectors.column(0);
    let dim = obs.dim();
    let raw: Vec<CMatrix> = h
        .bases()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let d = b.ncols();
            if d == 0 {
                return CMatrix::zeros(dim, dim);
            }
            let coef = CMatrix::from_fn(d, d, |mu, nu| coeffs[h.index(i, mu, nu)]);
            b * coef * b.adjoint()
        })
        .collect();
    let herm: Vec<CMatrix> = raw.iter().map(matcore::hermitian_part).collect();
    let anti: Vec<CMatrix> = raw.iter().map(|x| (x - x.adjoint()) * (I * c(0.5, 0.0))).collect();
    let size = |v: &[CMatrix]| v.iter().map(|m| m.norm()).fold(0.0_f64, f64::max);
    let total = size(&raw);
    let direction = if size(&herm) > 1e-6 * total { herm } else { anti };
    scale_witness(obs, direction, tol)
}

/// Scales D so that A ± D stays valid: eps = 0.5 * min_i lambda_min(A_i|ran) / ||D_i||.
fn scale_witness(obs: &Observable, direction: Vec<CMatrix>, tol: &ToleranceConfig) -> Vec<CMatrix> {
    let largest = direction.iter().map(|d| d.norm()).fold(0.0_f64, f64::max);
    let mut eps = f64::INFINITY;
    for (a, d) in obs.effects().iter().zip(&direction) {
        let dn = spectral_norm(d);
        if dn <= 1e-12 * largest {
            continue;
        }
        let (_, values) = matcore::effect_range(a, tol).expect("validated effects are Hermitian");
        let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
        if floor.is_finite() {
            eps = eps.min(floor / dn);
        }
    }
    let eps = if eps.is_finite() { 0.5 * eps } else { 0.0 };
    direction.into_iter().map(|d| d * c(eps, 0.0)).collect()
}

fn spectral_norm(m: &CMatrix) -> f64 {
    matcore::singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Independent check via the convexity definition: solve
/// {sum D_i = 0, D_i Hermitian and supported on ran(A_i)} over a real
/// parameterization and return a nonzero scaled solution, if any.
pub fn perturbation_oracle(obs: &Observable, tol: &ToleranceConfig) -> Option<Vec<CMatrix>> {
    let h = obs.dim();
    // Range bases from the column space of each effect, not from its eigendecomposition.
    let bases: Vec<CMatrix> = obs
        .effects()
        .iter()
        .map(|e| {
            let cs = matcore::column_space(e, tol);
            let keep = cs.ncols().min(matcore::effect_rank(e, tol));
            cs.columns(0, keep).into_owned()
        })
        .collect();
    let mut generators: Vec<(usize, CMatrix)> = Vec::new();
    for (i, b) in bases.iter().enumerate() {
        let d = b.ncols();
        for mu in 0..d {
            for nu in mu..d {
                let bm = b.column(mu);
                let bn = b.column(nu);
                let outer = &bm * bn.adjoint();
                if mu == nu {
                    generators.push((i, outer));
                } else {
                    generators.push((i, &outer + outer.adjoint()));
                    generators.push((i, (&outer - outer.adjoint()) * I));
                }
            }
        }
    }
    let params = generators.len();
    if params == 0 {
        return None;
    }
    let rows = 2 * h * h;
    let mut system = DMatrix::<f64>::zeros(rows, params);
    for (p, (_, g)) in generators.iter().enumerate() {
        for a in 0..h {
            for b in 0..h {
                system[(2 * (a * h + b), p)] = g[(a, b)].re;
                system[(2 * (a * h + b) + 1, p)] = g[(a, b)].im;
            }
        }
    }
    // A complex kernel vector of a real system has real and imaginary parts in the real kernel.
    let kernel = matcore::kernel_basis(&system.map(|v| c(v, 0.0)), tol);
    if kernel.ncols() == 0 {
        return None;
    }
    let col = kernel.column(0);
    let re: Vec<f64> = col.iter().map(|z| z.re).collect();
    let im: Vec<f64> = col.iter().map(|z| z.im).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let x = if norm(&re) >= norm(&im) { re } else { im };
    let mut direction = vec![CMatrix::zeros(h, h); obs.outcomes()];
    for (p, (i, g)) in generators.iter().enumerate() {
        direction[*i] += g * c(x[p], 0.0);
    }
    let witness = scale_witness(obs, direction, tol);
    if witness.iter().all(|d| d.norm() == 0.0) {
        return None;
    }
    Some(witness)
}

/// Cross block R of the super Gram matrix of A ⊕ B for rank-one A, B:
/// R_ij = G_ij * conj(G'_ij). Cross-checked against the Kraus form
/// sum_κ D_κ G D_κ* with D_κ = diag(conj ψ_κ), ψ_κ an ONB of ran(G').
pub fn direct_sum_r_block(a: &RankOneForm, b: &RankOneForm, tol: &ToleranceConfig) -> Result<CMatrix> {
    if a.outcomes() != b.outcomes() {
        return Err(PovmError::OutcomeCountMismatch { left: a.outcomes(), right: b.outcomes() });
    }
    let ga = a.gram_matrix().into_inner();
    let gb = b.gram_matrix().into_inner();
    let r = ga.zip_map(&gb, |x, y| x * y.conj());

    let (psi, _) = hermitian_range(&gb, &ToleranceConfig { equality_abs_tol: 1e-8, ..*tol })?;
    let n = a.outcomes();
    let mut kraus = CMatrix::zeros(n, n);
    for k in 0..psi.ncols() {
        let d = CMatrix::from_diagonal(&psi.column(k).map(|z| z.conj()));
        kraus += &d * &ga * d.adjoint();
    }
    let gap = max_abs_diff(&r, &kraus);
    if gap > 1e-9 {
        return Err(PovmError::Numerical(format!("Kraus form disagrees with entrywise product by {gap:.3e}")));
    }
    Ok(r)
}

/// Invertibility of the three blocks of the super Gram matrix of A ⊕ B.
#[derive(Debug, Clone)]
pub struct DirectSumAnalysis {
    pub left_min_eigenvalue: f64,
    pub right_min_eigenvalue: f64,
    pub cross_min_eigenvalue: f64,
    pub left_invertible: bool,
    pub right_invertible: bool,
    pub cross_invertible: bool,
}

impl DirectSumAnalysis {
    pub fn extremal(&self) -> bool {
        self.left_invertible && self.right_invertible && self.cross_invertible
    }
}

pub fn analyze_direct_sum(a: &Observable, b: &Observable, tol: &ToleranceConfig) -> Result<DirectSumAnalysis> {
    if a.outcomes() != b.outcomes() {
        return Err(PovmError::OutcomeCountMismatch { left: a.outcomes(), right: b.outcomes() });
    }
    let ba = range_bases(a, tol);
    let bb = range_bases(b, tol);
    let (li, lmin, _, _) = invertibility(&super_gram_from_bases(&ba), tol);
    let (ri, rmin, _, _) = invertibility(&super_gram_from_bases(&bb), tol);
    let (ci, cmin, _, _) = invertibility(&cross_gram(&ba, &bb), tol);
    Ok(DirectSumAnalysis {
        left_min_eigenvalue: lmin,
        right_min_eigenvalue: rmin,
        cross_min_eigenvalue: cmin,
        left_invertible: li,
        right_invertible: ri,
        cross_invertible: ci,
    })
}

/// Extremality of A ⊕ B decided blockwise (H_A, H_B and the cross block R).
pub fn direct_sum_extremality(a: &Observable, b: &Observable, tol: &ToleranceConfig) -> Result<bool> {
    Ok(analyze_direct_sum(a, b, tol)?.extremal())
}

/// Result of removing the eigenvalue-1 eigenspaces of all effects.
#[derive(Debug, Clone)]
pub struct EigenspaceOneReduction {
    /// Q = 1 - sum_i P_i, P_i the eigenvalue-1 eigenprojector of A_i.
    pub q: CMatrix,
    /// Q A_i Q on the full space.
    pub compressed: Vec<CMatrix>,
    /// The compressed observable written on QH; None when Q = 0.
    pub on_subspace: Option<Observable>,
}

pub fn eigenspace_one_reduction(obs: &Observable, tol: &ToleranceConfig) -> EigenspaceOneReduction {
    let h = obs.dim();
    let mut p_total = CMatrix::zeros(h, h);
    for e in obs.effects() {
        let eig = hermitian_eig(e, tol).expect("validated effects are Hermitian");
        for (k, &lambda) in eig.values.iter().enumerate() {
            if (lambda - 1.0).abs() <= tol.equality_abs_tol.max(1e-8) {
                let v = eig.vectors.column(k);
                p_total += &v * v.adjoint();
            }
        }
    }
    let q = CMatrix::identity(h, h) - p_total;
    let compressed: Vec<CMatrix> = obs.effects().iter().map(|e| &q * e * &q).collect();
    let (iso, _) = matcore::effect_range(&q, tol).expect("Q is Hermitian");
    let on_subspace = if iso.ncols() == 0 {
        None
    } else {
        let effects = obs.effects().iter().map(|e| iso.adjoint() * e * &iso).collect();
        Observable::validate(effects, iso.ncols(), Some(obs.labels().to_vec()), tol).ok()
    };
    EigenspaceOneReduction { q, compressed, on_subspace }
}

/// Extremality through the eigenvalue-1 reduction (the reduced observable on
/// QH is extremal iff the original is).
pub fn is_extremal_reduced(obs: &Observable, tol: &ToleranceConfig) -> bool {
    match eigenspace_one_reduction(obs, tol).on_subspace {
        None => true,
        Some(r) => is_extremal(&r, tol).extremal,
    }
}
