//! Constructions producing new observables from old ones.

mod family;
pub mod random;

pub use family::{complete_family, from_subspaces, random_independent_family, rank_constraints, SubspaceFamily};

use crate::error::{PovmError, Result};
use crate::matcore::{self, c, hermitian_eig, kron, CMatrix, ToleranceConfig};
use crate::observable::Observable;

/// Same outcomes, block-diagonal effects on H_1 ⊕ H_2.
pub fn direct_sum(a: &Observable, b: &Observable, tol: &ToleranceConfig) -> Result<Observable> {
    if a.outcomes() != b.outcomes() {
        return Err(PovmError::OutcomeCountMismatch { left: a.outcomes(), right: b.outcomes() });
    }
    let effects = a
        .effects()
        .iter()
        .zip(b.effects())
        .map(|(x, y)| matcore::block_diag(&[x, y]))
        .collect();
    Observable::validate(effects, a.dim() + b.dim(), Some(a.labels().to_vec()), tol)
}

/// Direct sum of several observables with a common outcome count.
pub fn direct_sum_all(parts: &[Observable], tol: &ToleranceConfig) -> Result<Observable> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| PovmError::InvalidInput("empty direct sum".into()))?;
    rest.iter().try_fold(first.clone(), |acc, p| direct_sum(&acc, p, tol))
}

/// Concatenated outcomes, zero-padded blocks on H_1 ⊕ H_2.
pub fn disjoint_sum(a: &Observable, b: &Observable, tol: &ToleranceConfig) -> Result<Observable> {
    let za = CMatrix::zeros(a.dim(), a.dim());
    let zb = CMatrix::zeros(b.dim(), b.dim());
    let mut effects: Vec<CMatrix> = a.effects().iter().map(|x| matcore::block_diag(&[x, &zb])).collect();
    effects.extend(b.effects().iter().map(|y| matcore::block_diag(&[&za, y])));
    let labels = a
        .labels()
        .iter()
        .map(|l| format!("1:{l}"))
        .chain(b.labels().iter().map(|l| format!("2:{l}")))
        .collect();
    Observable::validate(effects, a.dim() + b.dim(), Some(labels), tol)
}

/// Product outcomes (i, j), row-major with i from the left factor; effects kron(A_i, B_j).
pub fn tensor_product(a: &Observable, b: &Observable, tol: &ToleranceConfig) -> Result<Observable> {
    let mut effects = Vec::with_capacity(a.outcomes() * b.outcomes());
    let mut labels = Vec::with_capacity(a.outcomes() * b.outcomes());
    for (x, la) in a.effects().iter().zip(a.labels()) {
        for (y, lb) in b.effects().iter().zip(b.labels()) {
            effects.push(kron(x, y));
            labels.push(format!("({la},{lb})"));
        }
    }
    Observable::validate(effects, a.dim() * b.dim(), Some(labels), tol)
}

/// Rank-one spectral terms (alpha, v) of a PSD effect, ordered by descending
/// eigenvalue and then by the eigensolver's basis order.
pub fn spectral_terms(effect: &CMatrix, tol: &ToleranceConfig) -> Vec<(f64, nalgebra::DVector<matcore::C64>)> {
    let eig = hermitian_eig(effect, tol).expect("effects are Hermitian");
    let n = eig.values.len();
    let top = eig.spectral_radius();
    let cut = tol.rank_rel_tol * n as f64 * top.max(1.0);
    let mut idx: Vec<usize> = (0..n).filter(|&k| top > 0.0 && eig.values[k] > cut).collect();
    idx.sort_by(|&x, &y| eig.values[y].total_cmp(&eig.values[x]));
    idx.into_iter().map(|k| (eig.values[k], eig.vectors.column(k).into_owned())).collect()
}

fn sum_terms(terms: &[(f64, nalgebra::DVector<matcore::C64>)], dim: usize) -> CMatrix {
    terms.iter().fold(CMatrix::zeros(dim, dim), |acc, (alpha, v)| acc + (v * v.adjoint()) * c(*alpha, 0.0))
}

/// Elementary partial resolution: replaces A_n by (A_n - α_j P_j, α_j P_j).
pub fn partial_resolution(
    a: &Observable,
    outcome: usize,
    term: usize,
    tol: &ToleranceConfig,
) -> Result<Observable> {
    if outcome >= a.outcomes() {
        return Err(PovmError::InvalidInput(format!("outcome {outcome} out of range")));
    }
    let terms = spectral_terms(a.effect(outcome), tol);
    if terms.len() < 2 {
        return Err(PovmError::NotResolvable { outcome, rank: terms.len() });
    }
    if term >= terms.len() {
        return Err(PovmError::InvalidInput(format!("spectral term {term} out of range (0..{})", terms.len())));
    }
    let h = a.dim();
    let rest: Vec<_> = terms.iter().enumerate().filter(|(k, _)| *k != term).map(|(_, t)| t.clone()).collect();
    let split = sum_terms(&terms[term..=term], h);
    let mut effects = a.effects().to_vec();
    effects[outcome] = sum_terms(&rest, h);
    effects.insert(outcome + 1, split);
    let mut labels = a.labels().to_vec();
    let base = labels[outcome].clone();
    labels[outcome] = format!("{base}'");
    labels.insert(outcome + 1, format!("{base}''"));
    Observable::validate(effects, h, Some(labels), tol)
}

/// Splits every component into its rank-one spectral terms (zero effects drop out).
pub fn maximal_resolution(a: &Observable, tol: &ToleranceConfig) -> Result<Observable> {
    let h = a.dim();
    let mut effects = Vec::new();
    let mut labels = Vec::new();
    for (e, l) in a.effects().iter().zip(a.labels()) {
        let terms = spectral_terms(e, tol);
        let single = terms.len() == 1;
        for (k, t) in terms.iter().enumerate() {
            effects.push(sum_terms(std::slice::from_ref(t), h));
            labels.push(if single { l.clone() } else { format!("{l}.{}", k + 1) });
        }
    }
    Observable::validate(effects, h, Some(labels), tol)
}
