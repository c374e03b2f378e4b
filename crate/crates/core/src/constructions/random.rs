//! Seeded random observables and subspaces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::extremality::is_extremal;
use crate::matcore::{self, c, CMatrix, ToleranceConfig};
use crate::observable::{Observable, RankOneForm};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Orthonormal basis of a Haar-random d-dimensional subspace of C^h.
pub fn random_subspace<R: Rng + ?Sized>(h: usize, d: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(h, d, rng);
    g.qr().q()
}

/// Haar-random unitary (QR with the phases of R's diagonal removed).
pub fn random_unitary(h: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qr = gaussian_matrix(h, h, &mut rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..h {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..h {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Normalizes positive operators B_i with invertible sum F to F^{-1/2} B_i F^{-1/2}.
fn normalize(ops: Vec<CMatrix>, h: usize, tol: &ToleranceConfig) -> Result<Observable> {
    let f = ops.iter().fold(CMatrix::zeros(h, h), |acc, b| acc + b);
    let x = matcore::inv_sqrt_psd(&f, tol)?;
    let effects = ops.iter().map(|b| matcore::hermitian_part(&(&x * b * &x))).collect();
    Observable::validate(effects, h, None, tol)
}

/// Random rank-one observable with n outcomes in dimension h (n >= h).
pub fn random_rank_one(h: usize, n: usize, seed: u64, tol: &ToleranceConfig) -> Result<RankOneForm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = gaussian_matrix(h, n, &mut rng);
    let f = &v * v.adjoint();
    let x = matcore::inv_sqrt_psd(&f, tol)?;
    RankOneForm::new(x * v, tol)
}

/// Random observable whose effects have the given ranks (zeros allowed).
pub fn random_observable(h: usize, ranks: &[usize], seed: u64, tol: &ToleranceConfig) -> Result<Observable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = ranks
        .iter()
        .map(|&d| {
            let b = gaussian_matrix(h, d, &mut rng);
            &b * b.adjoint()
        })
        .collect();
    normalize(ops, h, tol)
}

/// Random extremal observable with the given ranks, or None if none is found
/// within the budget (seeds seed, seed+1, ...).
pub fn random_extremal(
    h: usize,
    ranks: &[usize],
    seed: u64,
    budget: usize,
    tol: &ToleranceConfig,
) -> Result<Option<Observable>> {
    for t in 0..budget as u64 {
        let obs = random_observable(h, ranks, seed.wrapping_add(t), tol)?;
        if is_extremal(&obs, tol).extremal {
            return Ok(Some(obs));
        }
    }
    Ok(None)
}
