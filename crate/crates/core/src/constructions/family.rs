use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::random::random_subspace;
use crate::error::{PovmError, Result};
use crate::extremality::super_gram_from_bases;
use crate::matcore::{self, hermitian_eig, CMatrix, ToleranceConfig, I};
use crate::observable::Observable;

/// Subspaces of C^h given by orthonormal bases (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceFamily {
    ambient_dim: usize,
    members: Vec<CMatrix>,
}

impl SubspaceFamily {
    /// Orthonormalizes each basis; every basis must have full column rank.
    pub fn from_bases(ambient_dim: usize, bases: Vec<CMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        let mut members = Vec::with_capacity(bases.len());
        for (i, b) in bases.into_iter().enumerate() {
            if b.nrows() != ambient_dim || b.ncols() == 0 {
                return Err(PovmError::BadBasis { index: i });
            }
            let q = matcore::column_space(&b, tol);
            if q.ncols() != b.ncols() {
                return Err(PovmError::BadBasis { index: i });
            }
            members.push(q);
        }
        Ok(Self { ambient_dim, members })
    }

    /// Takes bases that are already orthonormal (checked within 1e-10).
    pub fn from_orthonormal(ambient_dim: usize, members: Vec<CMatrix>) -> Result<Self> {
        for (i, m) in members.iter().enumerate() {
            let gram = m.adjoint() * m;
            if m.nrows() != ambient_dim
                || m.ncols() == 0
                || matcore::max_abs_diff(&gram, &CMatrix::identity(m.ncols(), m.ncols())) > 1e-10
            {
                return Err(PovmError::BadBasis { index: i });
            }
        }
        Ok(Self { ambient_dim, members })
    }

    /// The ranges of the nonzero effects of an observable.
    pub fn ranges_of(obs: &Observable, tol: &ToleranceConfig) -> Self {
        let members = crate::extremality::range_bases(obs, tol)
            .into_iter()
            .filter(|b| b.ncols() > 0)
            .collect();
        Self { ambient_dim: obs.dim(), members }
    }

    /// Coordinate subspaces for the given block sizes.
    pub fn coordinate(parts: &[usize]) -> Self {
        let h: usize = parts.iter().sum();
        let mut members = Vec::with_capacity(parts.len());
        let mut offset = 0;
        for &p in parts {
            members.push(CMatrix::identity(h, h).columns(offset, p).into_owned());
            offset += p;
        }
        Self { ambient_dim: h, members }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn members(&self) -> &[CMatrix] {
        &self.members
    }

    pub fn dims(&self) -> Vec<usize> {
        self.members.iter().map(|m| m.ncols()).collect()
    }

    pub fn square_sum(&self) -> usize {
        self.members.iter().map(|m| m.ncols() * m.ncols()).sum()
    }

    pub fn is_maximal(&self) -> bool {
        self.square_sum() == self.ambient_dim * self.ambient_dim
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        self.members.iter().map(|m| m * m.adjoint()).collect()
    }

    pub fn spans(&self, tol: &ToleranceConfig) -> bool {
        let h = self.ambient_dim;
        let all = self.members.iter().fold(CMatrix::zeros(h, 0), |acc, m| {
            let mut wide = CMatrix::zeros(h, acc.ncols() + m.ncols());
            wide.columns_mut(0, acc.ncols()).copy_from(&acc);
            wide.columns_mut(acc.ncols(), m.ncols()).copy_from(m);
            wide
        });
        matcore::numerical_rank(&all, tol) == h
    }

    /// Smallest eigenvalue of the operator-family Gram matrix, relative to its largest.
    pub fn operator_gram_spread(&self) -> (f64, f64) {
        let g = super_gram_from_bases(&self.members);
        let t = ToleranceConfig { equality_abs_tol: 1e-6, ..Default::default() };
        let eig = hermitian_eig(&g, &t).expect("Gram matrices are Hermitian");
        (eig.min(), eig.max())
    }

    /// Operators of different members are jointly linearly independent.
    pub fn operators_independent(&self, tol: &ToleranceConfig) -> bool {
        if self.members.is_empty() {
            return false;
        }
        let d = self.square_sum();
        let (lmin, lmax) = self.operator_gram_spread();
        lmax > 0.0 && lmin > tol.rank_rel_tol * d as f64 * lmax
    }

    /// Spanning and operator independence.
    pub fn is_independent(&self, tol: &ToleranceConfig) -> bool {
        self.spans(tol) && self.operators_independent(tol)
    }

    /// Embeds both families block-diagonally in C^{h1 + h2}.
    pub fn disjoint_union(&self, other: &SubspaceFamily) -> SubspaceFamily {
        let h = self.ambient_dim + other.ambient_dim;
        let mut members = Vec::with_capacity(self.members.len() + other.members.len());
        for m in &self.members {
            let mut e = CMatrix::zeros(h, m.ncols());
            e.view_mut((0, 0), m.shape()).copy_from(m);
            members.push(e);
        }
        for m in &other.members {
            let mut e = CMatrix::zeros(h, m.ncols());
            e.view_mut((self.ambient_dim, 0), m.shape()).copy_from(m);
            members.push(e);
        }
        SubspaceFamily { ambient_dim: h, members }
    }

    pub(crate) fn with_member(&self, basis: CMatrix) -> SubspaceFamily {
        let mut members = self.members.clone();
        members.push(basis);
        SubspaceFamily { ambient_dim: self.ambient_dim, members }
    }
}

/// Admissibility of a rank list at dimension h:
/// sum d >= h, d_i + d_j <= h for i != j, sum d^2 <= h^2.
pub fn rank_constraints(h: usize, dims: &[usize]) -> std::result::Result<(), String> {
    if dims.iter().any(|&d| d == 0) {
        return Err("ranks must be positive".into());
    }
    let sum: usize = dims.iter().sum();
    if sum < h {
        return Err(format!("sum of ranks {sum} < h = {h}"));
    }
    let mut sorted = dims.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    if sorted.len() >= 2 && sorted[0] + sorted[1] > h {
        return Err(format!("d_i + d_j = {} > h = {h}", sorted[0] + sorted[1]));
    }
    if sorted.len() == 1 && sorted[0] > h {
        return Err(format!("rank {} exceeds h = {h}", sorted[0]));
    }
    let sq: usize = dims.iter().map(|d| d * d).sum();
    if sq > h * h {
        return Err(format!("sum of squared ranks {sq} > h^2 = {}", h * h));
    }
    Ok(())
}

/// A_i = F^{-1/2} P_i F^{-1/2} with F = sum P_i; rank(A_i) = dim of member i.
pub fn from_subspaces(family: &SubspaceFamily, tol: &ToleranceConfig) -> Result<Observable> {
    if !family.spans(tol) {
        return Err(PovmError::NotSpanning);
    }
    if !family.operators_independent(tol) {
        return Err(PovmError::NotIndependent);
    }
    let h = family.ambient_dim();
    let projectors = family.projectors();
    let f = projectors.iter().fold(CMatrix::zeros(h, h), |acc, p| acc + p);
    let x = matcore::inv_sqrt_psd(&f, tol)?;
    let effects = projectors
        .iter()
        .map(|p| matcore::hermitian_part(&(&x * p * &x)))
        .collect();
    Observable::validate(effects, h, None, tol)
}

/// Adds one line to a non-maximal independent family, keeping it independent.
///
/// Picks X in the Hilbert–Schmidt complement of span{L(H_i)} (the projected
/// matrix unit of largest norm), Hermitizes it, and uses the eigenprojector
/// of that Hermitian operator that lies farthest from the span.
pub fn complete_family(family: &SubspaceFamily, tol: &ToleranceConfig) -> Result<SubspaceFamily> {
    let h = family.ambient_dim();
    if family.square_sum() >= h * h {
        return Err(PovmError::AlreadyMaximal);
    }
    if !family.is_independent(tol) {
        return Err(PovmError::NotIndependent);
    }
    let mut ops: Vec<nalgebra::DVector<matcore::C64>> = Vec::with_capacity(family.square_sum());
    for m in family.members() {
        for mu in 0..m.ncols() {
            for nu in 0..m.ncols() {
                let op = m.column(mu) * m.column(nu).adjoint();
                ops.push(matcore::vectorize(&op));
            }
        }
    }
    let span = CMatrix::from_columns(&ops);
    let complement = matcore::kernel_basis(&span.adjoint(), tol);
    if complement.ncols() == 0 {
        return Err(PovmError::AlreadyMaximal);
    }
    let to_complement = &complement * complement.adjoint();

    let unit = (0..h * h)
        .max_by(|&a, &b| to_complement.column(a).norm().total_cmp(&to_complement.column(b).norm()))
        .expect("h >= 1");
    let x_vec: Vec<_> = to_complement.column(unit).iter().copied().collect();
    let x = matcore::unvectorize(&x_vec, h, h);
    let distance = |m: &CMatrix| (complement.adjoint() * matcore::vectorize(m)).norm();
    let sym = &x + x.adjoint();
    let skew = (&x - x.adjoint()) * I;
    let y = if distance(&sym) >= distance(&skew) { sym } else { skew };

    let eig = hermitian_eig(&y, &ToleranceConfig { equality_abs_tol: 1e-8, ..*tol })?;
    let mut candidates: Vec<(f64, CMatrix)> = (0..h)
        .map(|k| {
            let v = eig.vectors.column(k).into_owned();
            let p = &v * v.adjoint();
            (distance(&p), CMatrix::from_columns(&[v]))
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, line) in candidates {
        let extended = family.with_member(line);
        if extended.is_independent(tol) {
            return Ok(extended);
        }
    }
    Err(PovmError::Numerical("no eigenprojector extends the family".into()))
}

/// Seeded search for an independent family with the given member dimensions.
///
/// Try t draws from a generator seeded with `seed + t`, so the result does not
/// depend on how tries are scheduled.
pub fn random_independent_family(
    h: usize,
    dims: &[usize],
    seed: u64,
    max_tries: usize,
    tol: &ToleranceConfig,
) -> Result<Option<SubspaceFamily>> {
    rank_constraints(h, dims).map_err(PovmError::ConstraintViolation)?;
    let found = (0..max_tries as u64).into_par_iter().find_map_first(|t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
        let members = dims.iter().map(|&d| random_subspace(h, d, &mut rng)).collect();
        let family = SubspaceFamily { ambient_dim: h, members };
        family.is_independent(tol).then_some(family)
    });
    Ok(found)
}
