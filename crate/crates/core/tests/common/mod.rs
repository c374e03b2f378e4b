#![allow(dead_code)]

use povm_core::constructions::random::{random_observable, random_rank_one, random_unitary};
use povm_core::constructions::{disjoint_sum, rank_constraints};
use povm_core::matcore::{self, CMatrix, ToleranceConfig};
use povm_core::{is_extremal, Observable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random observable on C^h with N <= max_n outcomes and mixed ranks (zeros
/// allowed). Every third draw carries an eigenvalue-1 component.
pub fn mixed_observable(h: usize, max_n: usize, rng: &mut ChaCha8Rng) -> Observable {
    loop {
        let n = rng.random_range(1..=max_n);
        let seed = rng.random();
        let candidate = if h > 1 && n > 1 && rng.random_range(0..3) == 0 {
            let ranks: Vec<usize> = (0..n - 1).map(|_| rng.random_range(0..h)).collect();
            random_observable(h - 1, &ranks, seed, &tol())
                .and_then(|b| disjoint_sum(&b, &Observable::trivial(1), &tol()))
        } else {
            let ranks: Vec<usize> = (0..n).map(|_| rng.random_range(0..=h)).collect();
            random_observable(h, &ranks, seed, &tol())
        };
        if let Ok(obs) = candidate {
            return obs;
        }
    }
}

/// Random extremal observable with an admissible random rank list.
pub fn extremal_observable(h: usize, rng: &mut ChaCha8Rng) -> Observable {
    loop {
        let n = rng.random_range(1..=h * h);
        let ranks: Vec<usize> = (0..n).map(|_| rng.random_range(1..=h)).collect();
        if rank_constraints(h, &ranks).is_err() {
            continue;
        }
        if let Ok(obs) = random_observable(h, &ranks, rng.random(), &tol()) {
            if is_extremal(&obs, &tol()).extremal {
                return obs;
            }
        }
    }
}

/// Random extremal observable with at least one component of rank >= 2.
pub fn extremal_with_resolvable(h: usize, rng: &mut ChaCha8Rng) -> (Observable, usize) {
    loop {
        let obs = extremal_observable(h, rng);
        if let Some(i) = obs.ranks(&tol()).iter().position(|&r| r >= 2) {
            return (obs, i);
        }
    }
}

/// Generic random rank-one observable with n >= h outcomes (extremal when n <= h^2).
pub fn rank_one(h: usize, n: usize, rng: &mut ChaCha8Rng) -> Observable {
    random_rank_one(h, n, rng.random(), &tol()).unwrap().to_observable(&tol()).unwrap()
}

/// Sharp observable with n outcomes on C^k; some effects may be zero.
pub fn sharp(k: usize, n: usize, rng: &mut ChaCha8Rng) -> Observable {
    let mut effects = vec![CMatrix::zeros(k, k); n];
    for j in 0..k {
        let i = rng.random_range(0..n);
        effects[i][(j, j)] = matcore::ONE;
    }
    Observable::validate(effects, k, None, &tol()).unwrap()
}

pub fn conjugate(obs: &Observable, u: &CMatrix) -> Observable {
    let effects = obs.effects().iter().map(|a| matcore::hermitian_part(&(u * a * u.adjoint()))).collect();
    Observable::validate(effects, obs.dim(), Some(obs.labels().to_vec()), &tol()).unwrap()
}

pub fn unitary(h: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    random_unitary(h, rng.random())
}

/// D sums to zero, each D_i lives on ran(A_i), A ± D are observables, D != 0.
pub fn witness_is_valid(obs: &Observable, d: &[CMatrix]) -> bool {
    let t = tol();
    let h = obs.dim();
    if d.len() != obs.outcomes() || d.iter().all(|x| matcore::max_abs(x) < 1e-12) {
        return false;
    }
    let sum = d.iter().fold(CMatrix::zeros(h, h), |acc, x| acc + x);
    if matcore::max_abs(&sum) > 1e-9 {
        return false;
    }
    for (a, x) in obs.effects().iter().zip(d) {
        let p = matcore::projector_onto(&matcore::column_space(a, &t), &t);
        if matcore::max_abs_diff(&(&p * x * &p), x) > 1e-9 {
            return false;
        }
    }
    [1.0, -1.0].iter().all(|&s| {
        let effects = obs.effects().iter().zip(d).map(|(a, x)| a + x * matcore::c(s, 0.0)).collect();
        Observable::validate(effects, h, None, &t).is_ok()
    })
}
