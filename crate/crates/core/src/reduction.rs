//! Reduction of an observable into factor observables over the minimal
//! projections of the center of the algebra generated by its effects.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::matcore::{self, c, hermitian_eig, CMatrix, ToleranceConfig, C64, I};
use crate::observable::{Observable, RankOneForm};

const CENTER_SEED: u64 = 0x5eed_c0de;
const MAX_DRAWS: u64 = 16;

/// Block decomposition A = ⊕ A^(μ).
#[derive(Debug, Clone)]
pub struct Reduction {
    /// Minimal central projections P_μ, in the same order as `factors`.
    pub central_projections: Vec<CMatrix>,
    /// Factor observables V_μ* A_i V_μ.
    pub factors: Vec<Observable>,
    /// Isometries V_μ (h × h_μ) with V_μ V_μ* = P_μ.
    pub isometries: Vec<CMatrix>,
    /// Dimension of the generated algebra.
    pub algebra_dim: usize,
    /// Dimension of its center.
    pub center_dim: usize,
}

impl Reduction {
    /// Number of factors M.
    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.isometries.iter().map(|v| v.ncols()).collect()
    }

    /// Σ_μ V_μ A^(μ)_i V_μ* for every outcome i.
    pub fn reassemble(&self) -> Vec<CMatrix> {
        let h = self.isometries.first().map_or(0, |v| v.nrows());
        let n = self.factors.first().map_or(0, |f| f.outcomes());
        (0..n)
            .map(|i| {
                self.factors
                    .iter()
                    .zip(&self.isometries)
                    .fold(CMatrix::zeros(h, h), |acc, (f, v)| acc + v * f.effect(i) * v.adjoint())
            })
            .collect()
    }
}

/// Orthonormal list of vectorized operators, extended one operator at a time.
struct OperatorSpan {
    basis: Vec<DVector<C64>>,
    rel_tol: f64,
}

impl OperatorSpan {
    /// Adds the part of `m` orthogonal to the span when it exceeds `rel_tol`
    /// times `scale`, returning the new unit basis element.
    fn push(&mut self, m: &CMatrix, scale: f64) -> Option<CMatrix> {
        let (rows, cols) = m.shape();
        let mut r = matcore::vectorize(m);
        for _ in 0..2 {
            for b in &self.basis {
                let proj = b.dotc(&r);
                r -= b * proj;
            }
        }
        let rn = r.norm();
        if rn > self.rel_tol * scale {
            let unit = r / c(rn, 0.0);
            let out = matcore::unvectorize(unit.as_slice(), rows, cols);
            self.basis.push(unit);
            Some(out)
        } else {
            None
        }
    }
}

/// Orthonormal basis (vectorized, row-major) of the algebra generated by the
/// effects and the identity.
pub fn generated_algebra(obs: &Observable, tol: &ToleranceConfig) -> Vec<CMatrix> {
    let h = obs.dim();
    let mut span = OperatorSpan { basis: Vec::new(), rel_tol: 100.0 * tol.equality_abs_tol };
    span.push(&CMatrix::identity(h, h), 1.0);
    // Unit-norm generators and frontier: every word has norm <= 1, so
    // products that cancel to round-off are rejected.
    let gens: Vec<CMatrix> = obs
        .effects()
        .iter()
        .filter(|a| matcore::max_abs(a) > tol.equality_abs_tol)
        .map(|a| a / c(a.norm(), 0.0))
        .collect();
    let mut frontier: Vec<CMatrix> = gens.iter().filter_map(|a| span.push(a, 1.0)).collect();
    // Words of length at most h^2 already span the algebra.
    for _ in 0..h * h {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for b in &frontier {
            for a in &gens {
                if let Some(w) = span.push(&(a * b), 1.0) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    span.basis.iter().map(|v| matcore::unvectorize(v.as_slice(), h, h)).collect()
}

/// Basis of the center: algebra elements commuting with every effect.
pub fn center_basis(obs: &Observable, algebra: &[CMatrix], tol: &ToleranceConfig) -> Vec<CMatrix> {
    let h = obs.dim();
    let n = obs.outcomes();
    let mut system = CMatrix::zeros(n * h * h, algebra.len());
    for (k, b) in algebra.iter().enumerate() {
        for (i, a) in obs.effects().iter().enumerate() {
            let v = matcore::vectorize(&matcore::commutator(a, b));
            system.view_mut((i * h * h, k), (h * h, 1)).copy_from(&v);
        }
    }
    // A commutative algebra leaves only round-off, which a relative rank cut would keep.
    let coeffs = if n == 0 || matcore::max_abs(&system) <= 100.0 * tol.equality_abs_tol {
        CMatrix::identity(algebra.len(), algebra.len())
    } else {
        matcore::kernel_basis(&system, tol)
    };
    (0..coeffs.ncols())
        .map(|j| {
            algebra
                .iter()
                .zip(coeffs.column(j).iter())
                .fold(CMatrix::zeros(h, h), |acc, (b, &w)| acc + b * w)
        })
        .collect()
}

/// Eigenprojectors of a Hermitian matrix, grouping eigenvalues closer than `gap`.
fn eigen_clusters(m: &CMatrix, gap: f64) -> Vec<CMatrix> {
    let t = ToleranceConfig { equality_abs_tol: 1e-6, ..Default::default() };
    let eig = hermitian_eig(m, &t).expect("center elements are Hermitized");
    let n = eig.values.len();
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || eig.values[k] - eig.values[k - 1] > gap {
            let v = eig.vectors.columns(start, k - start);
            out.push(&v * v.adjoint());
            start = k;
        }
    }
    out
}

/// Nonzero products P Q of two commuting projector partitions.
fn refine(a: &[CMatrix], b: &[CMatrix]) -> Vec<CMatrix> {
    let mut out = Vec::new();
    for p in a {
        for q in b {
            let pq = matcore::hermitian_part(&(p * q));
            if pq.trace().re > 0.5 {
                out.push(pq);
            }
        }
    }
    out
}

/// Orthonormal basis of ran(P) from pivot columns of P, orthonormalized in index order.
fn canonical_isometry(p: &CMatrix) -> CMatrix {
    let h = p.nrows();
    let rank = p.trace().re.round() as usize;
    let mut chosen: Vec<usize> = Vec::with_capacity(rank);
    let mut residual: Vec<DVector<C64>> = (0..h).map(|j| p.column(j).into_owned()).collect();
    for _ in 0..rank {
        let j = (0..h)
            .filter(|j| !chosen.contains(j))
            .max_by(|&x, &y| residual[x].norm().total_cmp(&residual[y].norm()).then(y.cmp(&x)))
            .expect("rank <= h");
        let u = residual[j].normalize();
        for r in residual.iter_mut() {
            let proj = u.dotc(r);
            *r -= &u * proj;
        }
        chosen.push(j);
    }
    chosen.sort_unstable();
    let cols: Vec<DVector<C64>> = chosen.iter().map(|&j| p.column(j).into_owned()).collect();
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(rank);
    for mut v in cols {
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        basis.push(v.normalize());
    }
    if basis.is_empty() {
        return CMatrix::zeros(h, 0);
    }
    CMatrix::from_columns(&basis)
}

fn lex_key(p: &CMatrix) -> Vec<i64> {
    p.transpose()
        .iter()
        .flat_map(|z| [(z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64])
        .collect()
}

/// Minimal central projections, factors and embeddings.
///
/// Factors are sorted by descending dimension, then by descending
/// lexicographic order of the projector entries (row-major).
pub fn reduce(obs: &Observable, tol: &ToleranceConfig) -> Reduction {
    let h = obs.dim();
    let algebra = generated_algebra(obs, tol);
    let center = center_basis(obs, &algebra, tol);
    let center_dim = center.len().max(1);
    let hermitian: Vec<CMatrix> = center
        .iter()
        .flat_map(|z| {
            let scale = z.norm();
            [matcore::hermitian_part(z), matcore::hermitian_part(&(z * (-I)))]
                .into_iter()
                .filter(move |part| part.norm() > 1e-8 * scale)
        })
        .map(|z| {
            let n = z.norm();
            z / c(n, 0.0)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(CENTER_SEED);
    let mut partition = vec![CMatrix::identity(h, h)];
    for draw in 0..MAX_DRAWS {
        let z = hermitian
            .iter()
            .fold(CMatrix::zeros(h, h), |acc, b| acc + b * c(rng.random_range(-1.0..1.0), 0.0));
        let spread = matcore::max_abs(&z).max(1.0);
        partition = refine(&partition, &eigen_clusters(&z, 1e-6 * spread));
        if draw >= 1 && partition.len() >= center_dim {
            break;
        }
    }

    let mut blocks: Vec<(CMatrix, CMatrix)> = partition
        .into_iter()
        .map(|p| {
            let v = canonical_isometry(&p);
            (&v * v.adjoint(), v)
        })
        .collect();
    blocks.sort_by(|(pa, va), (pb, vb)| vb.ncols().cmp(&va.ncols()).then_with(|| lex_key(pb).cmp(&lex_key(pa))));

    let labels = obs.labels().to_vec();
    let mut central_projections = Vec::with_capacity(blocks.len());
    let mut factors = Vec::with_capacity(blocks.len());
    let mut isometries = Vec::with_capacity(blocks.len());
    for (p, v) in blocks {
        let effects = obs.effects().iter().map(|a| matcore::hermitian_part(&(v.adjoint() * a * &v))).collect();
        let factor = Observable::validate(effects, v.ncols(), Some(labels.clone()), &loose(tol))
            .expect("compressions by a central projection form an observable");
        central_projections.push(p);
        factors.push(factor);
        isometries.push(v);
    }
    Reduction { central_projections, factors, isometries, algebra_dim: algebra.len(), center_dim: center.len() }
}

fn loose(tol: &ToleranceConfig) -> ToleranceConfig {
    ToleranceConfig { equality_abs_tol: tol.equality_abs_tol.max(1e-8), ..*tol }
}

/// M = 1.
pub fn is_irreducible(obs: &Observable, tol: &ToleranceConfig) -> bool {
    reduce(obs, tol).m() == 1
}

/// Join recursion for rank-one observables: Q = P_1, then repeatedly
/// Q := Q ∨ P_i for the first P_i not commuting with Q. Irreducible iff the
/// final Q_L is the identity.
pub fn rank_one_irreducible(form: &RankOneForm, tol: &ToleranceConfig) -> (bool, CMatrix) {
    let h = form.dim();
    let lines: Vec<CMatrix> = (0..form.outcomes())
        .map(|i| {
            let v = form.vector(i).normalize();
            CMatrix::from_columns(&[v])
        })
        .collect();
    let commute_tol = 100.0 * tol.equality_abs_tol;
    let mut range = lines[0].clone();
    let mut q = &range * range.adjoint();
    loop {
        let next = lines.iter().find(|l| {
            let p = *l * l.adjoint();
            matcore::max_abs(&matcore::commutator(&q, &p)) > commute_tol
        });
        let Some(l) = next else { break };
        let mut joined = CMatrix::zeros(h, range.ncols() + 1);
        joined.columns_mut(0, range.ncols()).copy_from(&range);
        joined.column_mut(range.ncols()).copy_from(&l.column(0));
        range = matcore::column_space(&joined, tol);
        q = &range * range.adjoint();
    }
    let full = matcore::max_abs_diff(&q, &CMatrix::identity(h, h)) < commute_tol;
    (full, q)
}

/// Convenience wrapper taking an observable whose effects are rank one.
pub fn rank_one_irreducible_obs(obs: &Observable, tol: &ToleranceConfig) -> Result<(bool, CMatrix)> {
    let form = RankOneForm::from_observable(obs, tol)?;
    Ok(rank_one_irreducible(&form, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::direct_sum;
    use crate::fixtures;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn trivial_observable_is_irreducible() {
        let r = reduce(&Observable::trivial(3), &tol());
        assert_eq!((r.m(), r.algebra_dim, r.center_dim), (1, 1, 1));
        assert_eq!(r.factor_dims(), vec![3]);
    }

    #[test]
    fn sharp_onb_splits_into_lines() {
        let obs = Observable::sharp_onb(3);
        let r = reduce(&obs, &tol());
        assert_eq!(r.m(), 3);
        assert_eq!(r.factor_dims(), vec![1, 1, 1]);
        assert!((r.central_projections[0][(0, 0)].re - 1.0).abs() < 1e-12);
        for (a, b) in r.reassemble().iter().zip(obs.effects()) {
            assert!(matcore::max_abs_diff(a, b) < 1e-10);
        }
        assert!(!is_irreducible(&obs, &tol()));
    }

    #[test]
    fn tetrahedron_is_irreducible_both_ways() {
        let f = fixtures::tetrahedron();
        let (irr, q) = rank_one_irreducible(&f, &tol());
        assert!(irr);
        assert!(matcore::max_abs_diff(&q, &CMatrix::identity(2, 2)) < 1e-10);
        assert!(is_irreducible(&f.to_observable(&tol()).unwrap(), &tol()));
    }

    #[test]
    fn commuting_lines_are_reducible() {
        let obs = Observable::sharp_onb(2).mix(&Observable::sharp_onb(2), 0.5, &tol()).unwrap();
        let (irr, q) = rank_one_irreducible_obs(&obs, &tol()).unwrap();
        assert!(!irr);
        assert!((q.trace().re - 1.0).abs() < 1e-10);
        assert!(!is_irreducible(&obs, &tol()));
    }

    #[test]
    fn direct_sum_of_inequivalent_factors() {
        let e = fixtures::counterexample_e().to_observable(&tol()).unwrap();
        let f = fixtures::tetrahedron().to_observable(&tol()).unwrap();
        let ef = direct_sum(&e, &f, &tol()).unwrap();
        let r = reduce(&ef, &tol());
        assert_eq!(r.m(), 2);
        assert_eq!(r.factor_dims(), vec![2, 2]);
        for (factor, input) in r.factors.iter().zip([&e, &f]) {
            for (x, y) in factor.effects().iter().zip(input.effects()) {
                assert!(matcore::max_abs_diff(x, y) < 1e-8);
            }
        }
        for (a, b) in r.reassemble().iter().zip(ef.effects()) {
            assert!(matcore::max_abs_diff(a, b) < 1e-8);
        }
    }
}
