//! The rank problem: which rank lists belong to extremal observables.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::constructions::{complete_family, from_subspaces, random_independent_family, SubspaceFamily};
use crate::error::{PovmError, Result};
use crate::extremality::{is_extremal, super_gram_from_bases};
use crate::fixtures;
use crate::matcore::{kron, CMatrix, ToleranceConfig};
use crate::observable::Observable;

/// Ranks d_1 >= d_2 >= ... of the effects of an observable on C^h.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RankList {
    pub h: usize,
    pub dims: Vec<usize>,
}

impl RankList {
    pub fn new(h: usize, mut dims: Vec<usize>) -> Self {
        dims.sort_unstable_by(|a, b| b.cmp(a));
        Self { h, dims }
    }

    pub fn square_sum(&self) -> usize {
        self.dims.iter().map(|d| d * d).sum()
    }

    pub fn is_admissible(&self) -> bool {
        crate::constructions::rank_constraints(self.h, &self.dims).is_ok()
    }

    pub fn is_maximal(&self) -> bool {
        self.is_admissible() && self.square_sum() == self.h * self.h
    }

    fn ones(&self) -> usize {
        self.dims.iter().filter(|&&d| d == 1).count()
    }

    fn without_ones(&self) -> Vec<usize> {
        self.dims.iter().copied().filter(|&d| d > 1).collect()
    }
}

impl fmt::Display for RankList {
    /// Exponent notation, e.g. (3,2^4).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut k = 0;
        while k < self.dims.len() {
            let d = self.dims[k];
            let run = self.dims[k..].iter().take_while(|&&x| x == d).count();
            parts.push(if run == 1 { d.to_string() } else { format!("{d}^{run}") });
            k += run;
        }
        write!(f, "({})", parts.join(","))
    }
}

/// All admissible lists with sum of squares h^2, in descending lexicographic order.
pub fn enumerate_maximal_lists(h: usize) -> Vec<RankList> {
    fn go(h: usize, remaining: usize, max_d: usize, cur: &mut Vec<usize>, out: &mut Vec<RankList>) {
        if remaining == 0 {
            let list = RankList::new(h, cur.clone());
            if list.is_admissible() {
                out.push(list);
            }
            return;
        }
        for d in (1..=max_d.min(h)).rev() {
            if d * d > remaining {
                continue;
            }
            // Pair condition against the largest element already chosen.
            if let Some(&first) = cur.first() {
                if first + d > h {
                    continue;
                }
            }
            cur.push(d);
            go(h, remaining - d * d, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if h > 0 {
        go(h, h * h, h, &mut Vec::new(), &mut out);
    }
    out
}

/// The maximal lists named explicitly in the classical treatment of h <= 5.
/// For h = 5 the remaining two admissible lists, (2^5,1^5) and (2^6,1), are
/// reported as discovered by enumeration.
pub fn named_lists(h: usize) -> Vec<RankList> {
    let l = |dims: &[(usize, usize)]| {
        RankList::new(h, dims.iter().flat_map(|&(d, n)| std::iter::repeat_n(d, n)).collect())
    };
    match h {
        1 => vec![l(&[(1, 1)])],
        2 => vec![l(&[(2, 1)]), l(&[(1, 4)])],
        3 => vec![l(&[(3, 1)]), l(&[(2, 1), (1, 5)]), l(&[(1, 9)])],
        4 => enumerate_maximal_lists(4),
        5 => vec![
            l(&[(5, 1)]),
            l(&[(4, 1), (1, 9)]),
            l(&[(3, 1), (2, 1), (1, 12)]),
            l(&[(3, 1), (1, 16)]),
            l(&[(2, 2), (1, 17)]),
            l(&[(2, 1), (1, 21)]),
            l(&[(1, 25)]),
            l(&[(2, 4), (1, 9)]),
            l(&[(2, 3), (1, 13)]),
            l(&[(3, 1), (2, 4)]),
            l(&[(3, 1), (2, 3), (1, 4)]),
            l(&[(3, 1), (2, 2), (1, 8)]),
        ],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    SharpPartition,
    DisjointSum,
    Tensor,
    PartialResolution,
    Completion,
    ExplicitFamily,
    RandomSearch,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::SharpPartition => "sharp-partition",
            Self::DisjointSum => "disjoint-sum",
            Self::Tensor => "tensor",
            Self::PartialResolution => "partial-resolution",
            Self::Completion => "completion",
            Self::ExplicitFamily => "explicit-family",
            Self::RandomSearch => "random-search",
        };
        f.write_str(s)
    }
}

/// A realization of a rank list by an independent subspace family.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub list: RankList,
    pub kind: CertificateKind,
    pub description: String,
    pub family: SubspaceFamily,
    pub observable: Observable,
    pub verified: bool,
}

#[derive(Clone)]
struct Recipe {
    kind: CertificateKind,
    description: String,
    family: SubspaceFamily,
}

/// Adds `k` lines by repeated completion.
fn pad(family: SubspaceFamily, k: usize, tol: &ToleranceConfig) -> Option<SubspaceFamily> {
    (0..k).try_fold(family, |f, _| complete_family(&f, tol).ok())
}

fn with_padding(mut r: Recipe, k: usize, tol: &ToleranceConfig) -> Option<Recipe> {
    if k > 0 {
        r.family = pad(r.family, k, tol)?;
        r.description = format!("{} + {k} completion line(s)", r.description);
    }
    Some(r)
}

/// Multiset difference a - b; None if b is not contained in a.
fn minus(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let mut rest = a.to_vec();
    for x in b {
        let pos = rest.iter().position(|y| y == x)?;
        rest.remove(pos);
    }
    Some(rest)
}

fn tensor_family(a: &SubspaceFamily, b: &SubspaceFamily) -> SubspaceFamily {
    let h = a.ambient_dim() * b.ambient_dim();
    let members = a.members().iter().flat_map(|x| b.members().iter().map(move |y| kron(x, y))).collect();
    SubspaceFamily::from_orthonormal(h, members).expect("Kronecker products of orthonormal bases are orthonormal")
}

/// Splits member `index` (dimension d >= 2) into its first d-1 basis vectors and the last one.
fn split_member(family: &SubspaceFamily, index: usize) -> SubspaceFamily {
    let mut members = family.members().to_vec();
    let m = members.remove(index);
    let d = m.ncols();
    members.insert(index, m.columns(d - 1, 1).into_owned());
    members.insert(index, m.columns(0, d - 1).into_owned());
    SubspaceFamily::from_orthonormal(family.ambient_dim(), members).expect("sub-bases stay orthonormal")
}

/// Deterministic certificate search with memoized constructive routes.
pub struct Realizer {
    tol: ToleranceConfig,
    seed: u64,
    budget: usize,
    memo: HashMap<RankList, Option<Recipe>>,
}

impl Realizer {
    pub fn new(seed: u64, budget: usize, tol: &ToleranceConfig) -> Self {
        Self { tol: *tol, seed, budget, memo: HashMap::new() }
    }

    /// First verified certificate over the route order; NotAdmissible for
    /// lists violating the constraints.
    pub fn realize(&mut self, list: &RankList) -> Result<Option<Certificate>> {
        if !list.is_admissible() {
            return Err(PovmError::NotAdmissible(format!("{list} at h = {}", list.h)));
        }
        let recipe = match self.constructive(list) {
            Some(r) => Some(r),
            None => self.random(list)?,
        };
        Ok(recipe.and_then(|r| self.certify(list, r)))
    }

    fn certify(&self, list: &RankList, r: Recipe) -> Option<Certificate> {
        let observable = from_subspaces(&r.family, &self.tol).ok()?;
        let ranks = RankList::new(list.h, observable.ranks(&self.tol));
        let verified = ranks == *list && is_extremal(&observable, &self.tol).extremal;
        verified.then(|| Certificate {
            list: list.clone(),
            kind: r.kind,
            description: r.description,
            family: r.family,
            observable,
            verified,
        })
    }

    fn constructive(&mut self, list: &RankList) -> Option<Recipe> {
        if let Some(hit) = self.memo.get(list) {
            return hit.clone();
        }
        let found = self
            .sharp(list)
            .or_else(|| self.disjoint(list))
            .or_else(|| self.tensor(list))
            .or_else(|| self.resolution(list))
            .or_else(|| self.explicit(list));
        self.memo.insert(list.clone(), found.clone());
        found
    }

    fn sharp(&self, list: &RankList) -> Option<Recipe> {
        let big = list.without_ones();
        let big_sum: usize = big.iter().sum();
        if big_sum > list.h || big_sum + list.ones() < list.h {
            return None;
        }
        let mut parts = big;
        parts.extend(std::iter::repeat_n(1, list.h - big_sum));
        let extra = list.dims.len() - parts.len();
        let base = Recipe {
            kind: CertificateKind::SharpPartition,
            description: format!("sharp partition {}", RankList::new(list.h, parts.clone())),
            family: SubspaceFamily::coordinate(&parts),
        };
        with_padding(base, extra, &self.tol)
    }

    fn disjoint(&mut self, list: &RankList) -> Option<Recipe> {
        let h = list.h;
        for h1 in (1..h).rev() {
            let h2 = h - h1;
            if h2 > h1 {
                continue;
            }
            for l1 in enumerate_maximal_lists(h1) {
                let Some(rest) = minus(&list.dims, &l1.dims) else { continue };
                for l2 in enumerate_maximal_lists(h2) {
                    let Some(ones) = minus(&rest, &l2.dims) else { continue };
                    if ones.iter().any(|&d| d != 1) {
                        continue;
                    }
                    let (Some(a), Some(b)) = (self.constructive(&l1), self.constructive(&l2)) else { continue };
                    let base = Recipe {
                        kind: CertificateKind::DisjointSum,
                        description: format!("disjoint sum {l1}@{h1} + {l2}@{h2}"),
                        family: a.family.disjoint_union(&b.family),
                    };
                    if let Some(r) = with_padding(base, ones.len(), &self.tol) {
                        return Some(r);
                    }
                }
            }
        }
        None
    }

    fn tensor(&mut self, list: &RankList) -> Option<Recipe> {
        let h = list.h;
        for h1 in (2..h).rev() {
            if h % h1 != 0 || h / h1 < 2 || h / h1 > h1 {
                continue;
            }
            let h2 = h / h1;
            for l1 in enumerate_maximal_lists(h1) {
                for l2 in enumerate_maximal_lists(h2) {
                    let product: Vec<usize> = l1.dims.iter().flat_map(|a| l2.dims.iter().map(move |b| a * b)).collect();
                    if RankList::new(h, product) != *list {
                        continue;
                    }
                    let (Some(a), Some(b)) = (self.constructive(&l1), self.constructive(&l2)) else { continue };
                    return Some(Recipe {
                        kind: CertificateKind::Tensor,
                        description: format!("tensor {l1}@{h1} x {l2}@{h2}"),
                        family: tensor_family(&a.family, &b.family),
                    });
                }
            }
        }
        None
    }

    /// Parent list: one d replaced the pair (d-1, 1) and 2d-1 further lines.
    fn resolution(&mut self, list: &RankList) -> Option<Recipe> {
        let mut lowered: Vec<usize> = list.dims.clone();
        lowered.dedup();
        for &low in &lowered {
            let d = low + 1;
            let mut removed = vec![low];
            removed.extend(std::iter::repeat_n(1, 2 * d - 1));
            let Some(mut parent) = minus(&list.dims, &removed) else { continue };
            parent.push(d);
            let parent = RankList::new(list.h, parent);
            if !parent.is_maximal() {
                continue;
            }
            let Some(p) = self.constructive(&parent) else { continue };
            let index = p.family.dims().iter().position(|&x| x == d)?;
            let base = Recipe {
                kind: CertificateKind::PartialResolution,
                description: format!("resolve a {d} of {parent} [{}]", p.description),
                family: split_member(&p.family, index),
            };
            if let Some(r) = with_padding(base, 2 * d - 2, &self.tol) {
                return Some(r);
            }
        }
        None
    }

    fn explicit(&self, list: &RankList) -> Option<Recipe> {
        if *list != RankList::new(5, vec![3, 2, 2, 2, 2]) {
            return None;
        }
        let family = SubspaceFamily::from_bases(5, fixtures::eleven_vector_bases(), &self.tol).ok()?;
        Some(Recipe {
            kind: CertificateKind::ExplicitFamily,
            description: "11-vector Gaussian-integer family".into(),
            family,
        })
    }

    fn random(&self, list: &RankList) -> Result<Option<Recipe>> {
        let found = random_independent_family(list.h, &list.dims, self.seed, self.budget, &self.tol)?;
        Ok(found.map(|family| Recipe {
            kind: CertificateKind::RandomSearch,
            description: format!("random family, seed {} budget {}", self.seed, self.budget),
            family,
        }))
    }
}

/// One-shot certificate search.
pub fn realize(list: &RankList, seed: u64, budget: usize, tol: &ToleranceConfig) -> Result<Option<Certificate>> {
    Realizer::new(seed, budget, tol).realize(list)
}

#[derive(Debug, Clone, Serialize)]
pub struct RankTableRow {
    pub list: String,
    pub dims: Vec<usize>,
    pub admissible: bool,
    pub named: bool,
    pub certificate: Option<CertificateKind>,
    pub description: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankTable {
    pub h: usize,
    pub rows: Vec<RankTableRow>,
}

impl RankTable {
    pub fn unresolved(&self) -> usize {
        self.rows.iter().filter(|r| r.certificate.is_none()).count()
    }
}

/// Certificates for every maximal admissible list, h = 1..=h_max.
pub fn rank_table(h_max: usize, seed: u64, budget: usize, tol: &ToleranceConfig) -> Vec<RankTable> {
    let mut realizer = Realizer::new(seed, budget, tol);
    (1..=h_max)
        .map(|h| {
            let named = named_lists(h);
            let rows = enumerate_maximal_lists(h)
                .into_iter()
                .map(|list| {
                    let cert = realizer.realize(&list).ok().flatten();
                    RankTableRow {
                        list: list.to_string(),
                        admissible: list.is_admissible(),
                        named: named.contains(&list),
                        certificate: cert.as_ref().map(|c| c.kind),
                        description: cert.map(|c| c.description),
                        dims: list.dims,
                    }
                })
                .collect();
            RankTable { h, rows }
        })
        .collect()
}

/// Gaussian integer with arbitrary precision parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: i64, im: i64) -> Self {
        Self { re: re.into(), im: im.into() }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -&self.im }
    }

    fn mul(&self, o: &Self) -> Self {
        Self { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }

    fn sub(&self, o: &Self) -> Self {
        Self { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    fn neg(&self) -> Self {
        Self { re: -&self.re, im: -&self.im }
    }

    /// Exact quotient; panics if `o` does not divide `self`.
    fn div_exact(&self, o: &Self) -> Self {
        let num = self.mul(&o.conj());
        let den = &o.re * &o.re + &o.im * &o.im;
        assert!((&num.re % &den).is_zero() && (&num.im % &den).is_zero(), "inexact Gaussian-integer division");
        Self { re: num.re / &den, im: num.im / den }
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            let sign = if self.im.is_negative() { '-' } else { '+' };
            write!(f, "{}{sign}{}i", self.re, self.im.abs())
        }
    }
}

/// Fraction-free (Bareiss) determinant over the Gaussian integers.
pub fn bareiss_det(mut m: Vec<Vec<GaussInt>>) -> GaussInt {
    let n = m.len();
    let mut prev = GaussInt { re: BigInt::one(), im: BigInt::zero() };
    let mut negate = false;
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return GaussInt::new(0, 0);
            };
            m.swap(k, p);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = t.div_exact(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let det = m.last().and_then(|r| r.last()).cloned().unwrap_or(GaussInt::new(1, 0));
    if negate {
        det.neg()
    } else {
        det
    }
}

/// Integer-vector families: block (i, j) of the super Gram matrix is
/// kron(a_ij, conj(a_ij)) with a_ij = B_i* B_j.
pub fn exact_super_gram(groups: &[Vec<Vec<GaussInt>>]) -> Vec<Vec<GaussInt>> {
    let dot = |x: &[GaussInt], y: &[GaussInt]| {
        x.iter().zip(y).fold(GaussInt::new(0, 0), |acc, (a, b)| {
            let p = a.conj().mul(b);
            GaussInt { re: acc.re + p.re, im: acc.im + p.im }
        })
    };
    let mut index = Vec::new();
    for (i, g) in groups.iter().enumerate() {
        for mu in 0..g.len() {
            for nu in 0..g.len() {
                index.push((i, mu, nu));
            }
        }
    }
    index
        .iter()
        .map(|&(i, mu, nu)| {
            index
                .iter()
                .map(|&(j, ka, la)| {
                    let a = dot(&groups[i][mu], &groups[j][ka]);
                    let b = dot(&groups[i][nu], &groups[j][la]);
                    a.mul(&b.conj())
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ElevenVectorReport {
    pub det_exact: String,
    pub det_exact_matches: bool,
    pub det_float_re: f64,
    pub det_float_im: f64,
    pub det_float_matches: bool,
    pub independent: bool,
    pub ranks: Vec<usize>,
    pub extremal: bool,
}

impl ElevenVectorReport {
    pub fn passed(&self) -> bool {
        self.det_exact_matches
            && self.det_float_matches
            && self.independent
            && self.ranks == [3, 2, 2, 2, 2]
            && self.extremal
    }
}

/// Exact and floating determinants of the 25 x 25 super Gram matrix of the
/// 11-vector family, plus the resulting observable's ranks and verdict.
pub fn verify_eleven_vector_certificate(tol: &ToleranceConfig) -> Result<ElevenVectorReport> {
    let groups: Vec<Vec<Vec<GaussInt>>> = fixtures::R2_GROUPS
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|&r| fixtures::R2_ROWS[r].iter().map(|&(a, b)| GaussInt::new(a, b)).collect())
                .collect()
        })
        .collect();
    let det = bareiss_det(exact_super_gram(&groups));
    let expected = GaussInt::new(fixtures::R2_DET, 0);

    let h: CMatrix = super_gram_from_bases(&fixtures::eleven_vector_bases());
    let det_float = h.determinant();
    let target = fixtures::R2_DET as f64;
    let det_float_matches = (det_float.re - target).abs() <= 1e-6 * target && det_float.im.abs() <= 1e-6 * target;

    let family = SubspaceFamily::from_bases(5, fixtures::eleven_vector_bases(), tol)?;
    let independent = family.is_independent(tol);
    let obs = from_subspaces(&family, tol)?;
    Ok(ElevenVectorReport {
        det_exact: det.to_string(),
        det_exact_matches: det == expected,
        det_float_re: det_float.re,
        det_float_im: det_float.im,
        det_float_matches,
        independent,
        ranks: obs.ranks(tol),
        extremal: is_extremal(&obs, tol).extremal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn enumeration_counts_and_order() {
        let counts: Vec<usize> = (1..=5).map(|h| enumerate_maximal_lists(h).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 7, 14]);
        let h4: Vec<String> = enumerate_maximal_lists(4).iter().map(|l| l.to_string()).collect();
        assert_eq!(h4, ["(4)", "(3,1^7)", "(2^4)", "(2^3,1^4)", "(2^2,1^8)", "(2,1^12)", "(1^16)"]);
        for h in 1..=5 {
            let all = enumerate_maximal_lists(h);
            assert!(named_lists(h).iter().all(|l| all.contains(l)));
        }
    }

    #[test]
    fn unnamed_lists_at_five() {
        let named = named_lists(5);
        let extra: Vec<String> = enumerate_maximal_lists(5)
            .into_iter()
            .filter(|l| !named.contains(l))
            .map(|l| l.to_string())
            .collect();
        assert_eq!(extra, ["(2^6,1)", "(2^5,1^5)"]);
    }

    #[test]
    fn bareiss_small_cases() {
        let m = vec![
            vec![GaussInt::new(0, 1), GaussInt::new(2, 0)],
            vec![GaussInt::new(1, 0), GaussInt::new(0, -1)],
        ];
        // i * (-i) - 2 = -1
        assert_eq!(bareiss_det(m), GaussInt::new(-1, 0));
        let swap = vec![
            vec![GaussInt::new(0, 0), GaussInt::new(1, 0)],
            vec![GaussInt::new(1, 0), GaussInt::new(0, 0)],
        ];
        assert_eq!(bareiss_det(swap), GaussInt::new(-1, 0));
    }

    #[test]
    fn eleven_vector_certificate() {
        let r = verify_eleven_vector_certificate(&tol()).unwrap();
        assert_eq!(r.det_exact, "1024");
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn routes() {
        let mut z = Realizer::new(0, 50, &tol());
        let kind = |z: &mut Realizer, h, d: Vec<usize>| z.realize(&RankList::new(h, d)).unwrap().map(|c| c.kind);
        assert_eq!(kind(&mut z, 3, vec![2, 1, 1, 1, 1, 1]), Some(CertificateKind::SharpPartition));
        assert_eq!(kind(&mut z, 4, vec![2, 2, 2, 2]), Some(CertificateKind::Tensor));
        assert_eq!(kind(&mut z, 5, vec![3, 2, 2, 2, 2]), Some(CertificateKind::ExplicitFamily));
        assert_eq!(kind(&mut z, 5, vec![2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1]), Some(CertificateKind::DisjointSum));
        let mut l = vec![2; 5];
        l.extend([1; 5]);
        assert_eq!(kind(&mut z, 5, l), Some(CertificateKind::PartialResolution));
        assert!(matches!(
            z.realize(&RankList::new(4, vec![3, 2, 1, 1, 1])),
            Err(PovmError::NotAdmissible(_))
        ));
    }

    #[test]
    fn display() {
        assert_eq!(RankList::new(5, vec![1, 2, 2, 2, 2, 2, 2]).to_string(), "(2^6,1)");
    }
}
