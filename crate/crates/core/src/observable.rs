//! Finite observables: validated effect lists, rank-one forms and their
//! Gram matrices.

use nalgebra::DVector;

use crate::error::{PovmError, Result};
use crate::matcore::{
    self, c, hermitian_eig, max_abs_diff, numerical_rank, CMatrix, ToleranceConfig, C64,
};

/// An N-outcome observable on C^h: positive effects summing to the identity.
///
/// Values are immutable once validated; every construction returns a new one.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    dim: usize,
    effects: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Observable {
    /// Checks shapes, positivity of each effect and normalization.
    pub fn validate(
        effects: Vec<CMatrix>,
        dim: usize,
        labels: Option<Vec<String>>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if effects.is_empty() {
            return Err(PovmError::ShapeMismatch("an observable needs at least one effect".into()));
        }
        if dim == 0 {
            return Err(PovmError::ShapeMismatch("dimension must be at least 1".into()));
        }
        for (i, e) in effects.iter().enumerate() {
            if e.shape() != (dim, dim) {
                return Err(PovmError::ShapeMismatch(format!(
                    "effect {i} is {}x{}, expected {dim}x{dim}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            if !matcore::all_finite(e) {
                return Err(PovmError::InvalidInput(format!("effect {i} has non-finite entries")));
            }
        }
        for (i, e) in effects.iter().enumerate() {
            let asym = matcore::hermitian_asymmetry(e);
            if asym > tol.equality_abs_tol {
                return Err(PovmError::NotPsd { index: i, min_eigenvalue: f64::NAN });
            }
            let eig = hermitian_eig(e, tol)?;
            if eig.min() < matcore::psd_floor(&eig, tol) {
                return Err(PovmError::NotPsd { index: i, min_eigenvalue: eig.min() });
            }
        }
        let sum = effects.iter().fold(CMatrix::zeros(dim, dim), |acc, e| acc + e);
        let deviation = max_abs_diff(&sum, &CMatrix::identity(dim, dim));
        if deviation > tol.equality_abs_tol {
            return Err(PovmError::SumNotIdentity { deviation });
        }
        let labels = match labels {
            Some(l) if l.len() == effects.len() => l,
            Some(l) => {
                return Err(PovmError::ShapeMismatch(format!(
                    "{} labels for {} effects",
                    l.len(),
                    effects.len()
                )))
            }
            None => (1..=effects.len()).map(|k| k.to_string()).collect(),
        };
        Ok(Self { dim, effects, labels })
    }

    /// Validates with the dimension taken from the first effect.
    pub fn new(effects: Vec<CMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        let dim = effects.first().map(|e| e.nrows()).unwrap_or(0);
        Self::validate(effects, dim, None, tol)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.effects.len() {
            return Err(PovmError::ShapeMismatch("label count differs from outcome count".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    /// The observable (1) with a single identity effect.
    pub fn trivial(dim: usize) -> Self {
        Self { dim, effects: vec![CMatrix::identity(dim, dim)], labels: vec!["1".into()] }
    }

    /// Sharp observable of the coordinate projectors for the given block sizes.
    pub fn sharp_partition(parts: &[usize]) -> Self {
        let dim: usize = parts.iter().sum();
        let mut effects = Vec::with_capacity(parts.len());
        let mut offset = 0;
        for &p in parts {
            let mut e = CMatrix::zeros(dim, dim);
            for k in offset..offset + p {
                e[(k, k)] = matcore::ONE;
            }
            offset += p;
            effects.push(e);
        }
        let labels = (1..=parts.len()).map(|k| k.to_string()).collect();
        Self { dim, effects, labels }
    }

    /// Sharp observable of the standard basis of C^h.
    pub fn sharp_onb(dim: usize) -> Self {
        Self::sharp_partition(&vec![1; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &CMatrix {
        &self.effects[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn into_parts(self) -> (usize, Vec<CMatrix>, Vec<String>) {
        (self.dim, self.effects, self.labels)
    }

    /// Rank of every effect, in outcome order.
    pub fn ranks(&self, tol: &ToleranceConfig) -> Vec<usize> {
        self.effects.iter().map(|e| matcore::effect_rank(e, tol)).collect()
    }

    /// True iff every nonzero effect is a projector.
    pub fn is_sharp(&self, tol: &ToleranceConfig) -> bool {
        self.effects.iter().all(|e| {
            matcore::effect_rank(e, tol) == 0 || matcore::is_projector(e, tol).unwrap_or(false)
        })
    }

    pub fn is_rank_one(&self, tol: &ToleranceConfig) -> bool {
        self.ranks(tol).iter().all(|&r| r == 1)
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Observable, w: f64, tol: &ToleranceConfig) -> Result<Observable> {
        if self.outcomes() != other.outcomes() {
            return Err(PovmError::OutcomeCountMismatch { left: self.outcomes(), right: other.outcomes() });
        }
        if self.dim != other.dim {
            return Err(PovmError::DimensionMismatch("mixing observables of different dimension".into()));
        }
        let effects = self
            .effects
            .iter()
            .zip(&other.effects)
            .map(|(a, b)| a * c(w, 0.0) + b * c(1.0 - w, 0.0))
            .collect();
        Observable::validate(effects, self.dim, Some(self.labels.clone()), tol)
    }
}

/// A rank-one observable written as (|e_i><e_i|): the columns of an h x N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneForm {
    vectors: CMatrix,
}

impl RankOneForm {
    /// `vectors` holds e_1..e_N as columns.
    pub fn new(vectors: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let (h, n) = vectors.shape();
        if h == 0 || n == 0 {
            return Err(PovmError::ShapeMismatch("empty vector family".into()));
        }
        for i in 0..n {
            if vectors.column(i).norm() <= tol.equality_abs_tol {
                return Err(PovmError::InvalidInput(format!("vector {i} vanishes")));
            }
        }
        let frame = &vectors * vectors.adjoint();
        let deviation = max_abs_diff(&frame, &CMatrix::identity(h, h));
        if deviation > tol.equality_abs_tol {
            return Err(PovmError::SumNotIdentity { deviation });
        }
        Ok(Self { vectors })
    }

    pub fn from_columns(columns: &[DVector<C64>], tol: &ToleranceConfig) -> Result<Self> {
        if columns.is_empty() {
            return Err(PovmError::ShapeMismatch("empty vector family".into()));
        }
        Self::new(CMatrix::from_columns(columns), tol)
    }

    /// Extracts e_i = sqrt(lambda_i) v_i from each effect; fails if any effect is not rank one.
    pub fn from_observable(obs: &Observable, tol: &ToleranceConfig) -> Result<Self> {
        let h = obs.dim();
        let mut vectors = CMatrix::zeros(h, obs.outcomes());
        for (i, e) in obs.effects().iter().enumerate() {
            let rank = matcore::effect_rank(e, tol);
            if rank != 1 {
                return Err(PovmError::InvalidInput(format!("effect {i} has rank {rank}, expected 1")));
            }
            let eig = hermitian_eig(e, tol)?;
            let top = eig.vectors.column(h - 1) * c(eig.max().sqrt(), 0.0);
            vectors.set_column(i, &top);
        }
        Self::new(vectors, tol)
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVector<C64> {
        self.vectors.column(i).into_owned()
    }

    pub fn to_observable(&self, tol: &ToleranceConfig) -> Result<Observable> {
        let effects = (0..self.outcomes())
            .map(|i| {
                let v = self.vectors.column(i);
                &v * v.adjoint()
            })
            .collect();
        Observable::validate(effects, self.dim(), None, tol)
    }

    /// The Gram matrix G_ij = <e_i, e_j>.
    pub fn gram_matrix(&self) -> GramMatrix {
        GramMatrix { entries: self.vectors.adjoint() * &self.vectors }
    }

    /// Applies a linear map to every vector (used to rotate by a unitary).
    pub fn transformed(&self, u: &CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        Self::new(u * &self.vectors, tol)
    }
}

/// Gram matrix of a rank-one observable.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: CMatrix,
}

impl GramMatrix {
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        matcore::ensure_square(&entries)?;
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_inner(self) -> CMatrix {
        self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// max |G^2 - G| over the entries.
    pub fn idempotency_defect(&self) -> f64 {
        max_abs_diff(&(&self.entries * &self.entries), &self.entries)
    }

    /// Entrywise |G_ij|^2, which is the super Gram matrix of the rank-one observable.
    pub fn modulus_squared(&self) -> CMatrix {
        self.entries.map(|z| c(z.norm_sqr(), 0.0))
    }
}

/// Rebuilds a rank-one observable on C^h (h = trace G) from its Gram matrix.
///
/// Inputs within `10 * equality_abs_tol` of idempotent are first snapped to
/// the nearest Hermitian projector.
pub fn from_gram(gram: &CMatrix, tol: &ToleranceConfig) -> Result<RankOneForm> {
    let n = matcore::ensure_square(gram)?;
    if n == 0 {
        return Err(PovmError::ShapeMismatch("empty Gram matrix".into()));
    }
    let asym = matcore::hermitian_asymmetry(gram);
    let defect = max_abs_diff(&(gram * gram), gram);
    let limit = 10.0 * tol.equality_abs_tol;
    if asym > limit || defect > limit {
        return Err(PovmError::NotProjector { deviation: asym.max(defect) });
    }
    for i in 0..n {
        if gram[(i, i)].re <= tol.equality_abs_tol {
            return Err(PovmError::ZeroDiagonal { index: i });
        }
    }
    let relaxed = ToleranceConfig { equality_abs_tol: limit, ..*tol };
    let eig = hermitian_eig(gram, &relaxed)?;
    let ones: Vec<usize> = (0..n).filter(|&k| eig.values[k] > 0.5).collect();
    let h = ones.len();
    if h == 0 {
        return Err(PovmError::NotProjector { deviation: defect });
    }
    // Psi has the eigenvalue-1 eigenvectors as columns; its adjoint is (e_1, ..., e_N).
    let mut psi = CMatrix::zeros(n, h);
    for (j, &k) in ones.iter().enumerate() {
        psi.set_column(j, &eig.vectors.column(k));
    }
    RankOneForm::new(psi.adjoint(), tol)
}

/// Returns a unitary U with U e_i = f_i for all i, if one exists.
///
/// U is fitted on a spanning subfamily of the e_i and verified on the rest.
pub fn unitary_equivalence(
    a: &RankOneForm,
    b: &RankOneForm,
    tol: &ToleranceConfig,
) -> Result<Option<CMatrix>> {
    if a.dim() != b.dim() {
        return Err(PovmError::DimensionMismatch(format!("dimensions {} vs {}", a.dim(), b.dim())));
    }
    if a.outcomes() != b.outcomes() {
        return Err(PovmError::DimensionMismatch(format!(
            "outcome counts {} vs {}",
            a.outcomes(),
            b.outcomes()
        )));
    }
    let ga = a.gram_matrix();
    let gb = b.gram_matrix();
    if max_abs_diff(ga.entries(), gb.entries()) > tol.equality_abs_tol {
        return Ok(None);
    }
    let h = a.dim();
    let mut chosen: Vec<usize> = Vec::with_capacity(h);
    for i in 0..a.outcomes() {
        if chosen.len() == h {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(i);
        let cols: Vec<DVector<C64>> = trial.iter().map(|&k| a.vector(k)).collect();
        if numerical_rank(&CMatrix::from_columns(&cols), tol) == trial.len() {
            chosen = trial;
        }
    }
    if chosen.len() != h {
        return Err(PovmError::Numerical("vectors do not span the space".into()));
    }
    let ea = CMatrix::from_columns(&chosen.iter().map(|&k| a.vector(k)).collect::<Vec<_>>());
    let fb = CMatrix::from_columns(&chosen.iter().map(|&k| b.vector(k)).collect::<Vec<_>>());
    let inv = ea
        .try_inverse()
        .ok_or_else(|| PovmError::Numerical("spanning subfamily is singular".into()))?;
    let u = fb * inv;
    let check = 1e-8;
    if max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(h, h)) > check {
        return Ok(None);
    }
    if max_abs_diff(&(&u * a.vectors()), b.vectors()) > check {
        return Ok(None);
    }
    Ok(Some(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn trivial_is_valid_and_identity_pair_is_not() {
        let t = Observable::validate(vec![CMatrix::identity(3, 3)], 3, None, &tol()).unwrap();
        assert_eq!(t.labels(), &["1".to_string()]);
        let err = Observable::new(vec![CMatrix::identity(2, 2), CMatrix::identity(2, 2)], &tol());
        assert!(matches!(err, Err(PovmError::SumNotIdentity { .. })));
    }

    #[test]
    fn printed_worked_example_does_not_sum_to_identity() {
        let err = Observable::new(fixtures::stated_worked_effects().to_vec(), &tol()).unwrap_err();
        match err {
            PovmError::SumNotIdentity { deviation } => {
                let expected = (36.0 + 12.0 * 6f64.sqrt()) / 50.0 - 1.0;
                assert!((deviation - expected).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_psd_and_shape_errors() {
        let mut a = CMatrix::identity(2, 2) * c(1.5, 0.0);
        let mut b = CMatrix::identity(2, 2) * c(-0.5, 0.0);
        let err = Observable::new(vec![a.clone(), b.clone()], &tol()).unwrap_err();
        assert!(matches!(err, PovmError::NotPsd { index: 1, .. }));
        a = CMatrix::identity(2, 2);
        b = CMatrix::zeros(3, 3);
        assert!(matches!(Observable::new(vec![a, b], &tol()), Err(PovmError::ShapeMismatch(_))));
    }

    #[test]
    fn zero_effects_are_allowed() {
        let obs = Observable::new(vec![CMatrix::identity(2, 2), CMatrix::zeros(2, 2)], &tol()).unwrap();
        assert_eq!(obs.ranks(&tol()), vec![2, 0]);
        assert!(obs.is_sharp(&tol()));
    }

    #[test]
    fn ranks_and_sharpness() {
        assert_eq!(Observable::sharp_onb(3).ranks(&tol()), vec![1, 1, 1]);
        assert_eq!(Observable::trivial(4).ranks(&tol()), vec![4]);
        let f = fixtures::tetrahedron().to_observable(&tol()).unwrap();
        assert_eq!(f.ranks(&tol()), vec![1, 1, 1, 1]);
        assert!(!f.is_sharp(&tol()));
        assert!(Observable::sharp_onb(3).is_sharp(&tol()));
        assert!(Observable::trivial(3).is_sharp(&tol()));
    }

    #[test]
    fn gram_of_fixtures() {
        let onb = RankOneForm::new(CMatrix::identity(3, 3), &tol()).unwrap();
        assert_eq!(onb.gram_matrix().entries(), &CMatrix::identity(3, 3));
        let g = fixtures::tetrahedron().gram_matrix();
        assert!((g.trace() - 2.0).abs() < 1e-12);
        assert!(g.idempotency_defect() < 1e-9);
        let ge = fixtures::counterexample_e().gram_matrix();
        assert!((ge.entries()[(0, 0)].re - 7.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn from_gram_cases() {
        let r = from_gram(&CMatrix::identity(3, 3), &tol()).unwrap();
        let v = r.vectors();
        assert!(max_abs_diff(&(v.adjoint() * v), &CMatrix::identity(3, 3)) < 1e-12);

        let f = fixtures::tetrahedron();
        let g = f.gram_matrix();
        let back = from_gram(g.entries(), &tol()).unwrap();
        assert_eq!(back.dim(), 2);
        assert!(max_abs_diff(back.gram_matrix().entries(), g.entries()) < 1e-8);

        let mut bad = CMatrix::zeros(2, 2);
        bad[(0, 0)] = matcore::ONE;
        assert!(matches!(from_gram(&bad, &tol()), Err(PovmError::ZeroDiagonal { index: 1 })));

        let not_proj = CMatrix::identity(2, 2) * c(0.7, 0.0);
        assert!(matches!(from_gram(&not_proj, &tol()), Err(PovmError::NotProjector { .. })));
    }

    #[test]
    fn unitary_equivalence_cases() {
        let f = fixtures::tetrahedron();
        let u = unitary_equivalence(&f, &f, &tol()).unwrap().unwrap();
        assert!(max_abs_diff(&(&u * f.vectors()), f.vectors()) < 1e-8);

        let e = fixtures::counterexample_e();
        assert!(unitary_equivalence(&e, &f, &tol()).unwrap().is_none());

        let onb2 = RankOneForm::new(CMatrix::identity(2, 2), &tol()).unwrap();
        assert!(matches!(unitary_equivalence(&onb2, &f, &tol()), Err(PovmError::DimensionMismatch(_))));
    }
}
