mod common;

use common::*;
use povm_core::constructions::random::{gaussian_matrix, random_unitary};
use povm_core::constructions::{
    complete_family, direct_sum, disjoint_sum, from_subspaces, partial_resolution, rank_constraints, tensor_product,
    SubspaceFamily,
};
use povm_core::extremality::{is_extremal_reduced, perturbation_oracle, range_bases, super_gram};
use povm_core::io::{observable_from_str, observable_to_string};
use povm_core::matcore::{self, c, hermitian_eig, inv_sqrt_psd, kron, numerical_rank, CMatrix};
use povm_core::observable::unitary_equivalence;
use povm_core::rankprob::{enumerate_maximal_lists, named_lists};
use povm_core::reduction::{is_irreducible, rank_one_irreducible_obs, reduce};
use povm_core::{from_gram, is_extremal, Observable};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn hermitian(h: usize, seed: u64) -> CMatrix {
    let g = gaussian_matrix(h, h, &mut rng(seed));
    matcore::hermitian_part(&g)
}

fn psd(h: usize, rank: usize, seed: u64) -> CMatrix {
    let g = gaussian_matrix(h, rank, &mut rng(seed));
    &g * g.adjoint()
}

fn integer_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(r.random_range(-4..=4) as f64, r.random_range(-4..=4) as f64))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn eigendecomposition_reconstructs(h in 1usize..7, seed: u64) {
        let m = hermitian(h, seed);
        let eig = hermitian_eig(&m, &tol()).unwrap();
        prop_assert!(matcore::max_abs_diff(&eig.reconstruct(), &m) <= 1e-8 * m.norm().max(1.0));
    }

    #[test]
    fn rank_of_product_is_bounded(h in 1usize..7, ra in 0usize..7, rb in 0usize..7, seed: u64) {
        let a = psd(h, ra.min(h), seed);
        let b = psd(h, rb.min(h), seed ^ 0x5555);
        let t = tol();
        prop_assert!(numerical_rank(&(&a * &b), &t) <= numerical_rank(&a, &t).min(numerical_rank(&b, &t)));
    }

    #[test]
    fn inverse_square_root_commutes(h in 1usize..7, seed: u64) {
        let m = psd(h, h, seed);
        let x = inv_sqrt_psd(&m, &tol()).unwrap();
        prop_assert!(matcore::max_abs(&matcore::commutator(&x, &m)) <= 1e-8 * m.norm().max(1.0));
    }

    #[test]
    fn kron_is_associative_on_integers(seed: u64) {
        let mut r = rng(seed);
        let dims: Vec<usize> = (0..6).map(|_| r.random_range(1..=3)).collect();
        let a = integer_matrix(&mut r, dims[0], dims[1]);
        let b = integer_matrix(&mut r, dims[2], dims[3]);
        let d = integer_matrix(&mut r, dims[4], dims[5]);
        prop_assert_eq!(kron(&kron(&a, &b), &d), kron(&a, &kron(&b, &d)));
    }

    #[test]
    fn gram_matrix_is_trace_h_projector(h in 1usize..5, extra in 0usize..7, seed: u64) {
        let form = povm_core::constructions::random::random_rank_one(h, h + extra, seed, &tol()).unwrap();
        let g = form.gram_matrix();
        prop_assert!(g.idempotency_defect() <= 1e-8);
        prop_assert!(matcore::hermitian_asymmetry(g.entries()) <= 1e-8);
        prop_assert!((g.trace() - h as f64).abs() <= 1e-8);
        prop_assert!((0..g.size()).all(|i| g.entries()[(i, i)].re > 0.0));
    }

    #[test]
    fn from_gram_round_trip(h in 1usize..5, extra in 0usize..7, seed: u64) {
        let t = tol();
        let n = (h + extra).min(10);
        let form = povm_core::constructions::random::random_rank_one(h, n, seed, &t).unwrap();
        let back = from_gram(form.gram_matrix().entries(), &t).unwrap();
        prop_assert!(unitary_equivalence(&form, &back, &t).unwrap().is_some());
    }

    #[test]
    fn convex_mixtures_are_observables(h in 1usize..4, seed: u64, w in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let a = mixed_observable(h, 5, &mut r);
        let ranks: Vec<usize> = (0..a.outcomes()).map(|_| r.random_range(0..=h)).collect();
        let b = povm_core::constructions::random::random_observable(h, &ranks, r.random(), &tol());
        if let Ok(b) = b {
            let mix = a.mix(&b, w, &tol()).unwrap();
            prop_assert!(Observable::validate(mix.effects().to_vec(), h, None, &tol()).is_ok());
        }
    }

    #[test]
    fn super_gram_is_hermitian_psd(h in 1usize..4, seed: u64) {
        let obs = mixed_observable(h, 6, &mut rng(seed));
        let m = super_gram(&obs, None, &tol()).unwrap();
        prop_assert!(matcore::hermitian_asymmetry(m.entries()) <= 1e-10);
        prop_assert!(m.eigenvalues().iter().all(|&x| x >= -1e-9));
    }

    #[test]
    fn verdict_matches_oracle(h in 1usize..4, seed: u64) {
        let t = tol();
        let obs = mixed_observable(h, 6, &mut rng(seed));
        let verdict = is_extremal(&obs, &t);
        let oracle = perturbation_oracle(&obs, &t);
        prop_assert_eq!(verdict.extremal, oracle.is_none());
        if let Some(w) = &verdict.witness {
            prop_assert!(witness_is_valid(&obs, w));
        }
        if let Some(w) = &oracle {
            prop_assert!(witness_is_valid(&obs, w));
        }
    }

    #[test]
    fn verdict_survives_eigenvalue_one_reduction(h in 2usize..5, seed: u64) {
        let mut r = rng(seed);
        let b = mixed_observable(h - 1, 5, &mut r);
        let obs = disjoint_sum(&b, &Observable::trivial(1), &tol()).unwrap();
        prop_assert_eq!(is_extremal(&obs, &tol()).extremal, is_extremal_reduced(&obs, &tol()));
    }

    #[test]
    fn verdict_is_basis_independent(h in 1usize..4, seed: u64) {
        let t = tol();
        let mut r = rng(seed);
        let obs = mixed_observable(h, 6, &mut r);
        let bases: Vec<CMatrix> = range_bases(&obs, &t)
            .into_iter()
            .map(|b| {
                let d = b.ncols();
                let mix = gaussian_matrix(d, d, &mut r) + CMatrix::identity(d, d) * c(2.0, 0.0);
                &b * mix
            })
            .collect();
        let plain = super_gram(&obs, None, &t).unwrap();
        let congruent = super_gram(&obs, Some(&bases), &t).unwrap();
        let invertible = |m: &povm_core::SuperGramMatrix| {
            let v = m.eigenvalues();
            let lmax = v.last().copied().unwrap_or(0.0);
            lmax > 0.0 && v[0] > t.rank_rel_tol * v.len() as f64 * lmax
        };
        // Recombination can move near-threshold eigenvalues; only clear cases are compared.
        let margin = plain.eigenvalues()[0] / plain.eigenvalues().last().unwrap().max(1e-300);
        prop_assume!(!(1e-9..1e-6).contains(&margin));
        prop_assert_eq!(invertible(&plain), invertible(&congruent));
    }

    #[test]
    fn rank_one_super_gram_is_modulus_square(h in 1usize..4, extra in 0usize..6, seed: u64) {
        let t = tol();
        let form = povm_core::constructions::random::random_rank_one(h, h + extra, seed, &t).unwrap();
        let obs = form.to_observable(&t).unwrap();
        let columns: Vec<CMatrix> = (0..form.outcomes()).map(|i| CMatrix::from_column_slice(h, 1, form.vector(i).as_slice())).collect();
        let m = super_gram(&obs, Some(&columns), &t).unwrap();
        prop_assert!(matcore::max_abs_diff(m.entries(), &form.gram_matrix().modulus_squared()) <= 1e-12);
    }

    #[test]
    fn extremal_ranks_satisfy_constraints(h in 1usize..4, seed: u64) {
        let obs = mixed_observable(h, 8, &mut rng(seed));
        let t = tol();
        if is_extremal(&obs, &t).extremal {
            let nonzero: Vec<usize> = obs.ranks(&t).into_iter().filter(|&d| d > 0).collect();
            prop_assert!(rank_constraints(h, &nonzero).is_ok());
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn disjoint_sum_keeps_extremality(ha in 1usize..3, hb in 1usize..3, seed: u64) {
        let mut r = rng(seed);
        let a = extremal_observable(ha, &mut r);
        let b = extremal_observable(hb, &mut r);
        prop_assert!(is_extremal(&disjoint_sum(&a, &b, &tol()).unwrap(), &tol()).extremal);
    }

    #[test]
    fn tensor_product_keeps_extremality(ha in 1usize..3, hb in 1usize..3, seed: u64) {
        let mut r = rng(seed);
        let a = extremal_observable(ha, &mut r);
        let b = extremal_observable(hb, &mut r);
        prop_assert!(is_extremal(&tensor_product(&a, &b, &tol()).unwrap(), &tol()).extremal);
    }

    #[test]
    fn partial_resolution_keeps_extremality(h in 2usize..4, seed: u64, term in 0usize..4) {
        let (obs, i) = extremal_with_resolvable(h, &mut rng(seed));
        let rank = obs.ranks(&tol())[i];
        let out = partial_resolution(&obs, i, term % rank, &tol()).unwrap();
        prop_assert!(is_extremal(&out, &tol()).extremal);
    }

    #[test]
    fn sharp_summand_preserves_verdict(h in 1usize..4, k in 1usize..3, seed: u64) {
        let mut r = rng(seed);
        let a = mixed_observable(h, 5, &mut r);
        let b = sharp(k, a.outcomes(), &mut r);
        let sum = direct_sum(&a, &b, &tol()).unwrap();
        prop_assert_eq!(is_extremal(&sum, &tol()).extremal, is_extremal(&a, &tol()).extremal);
    }

    #[test]
    fn unitary_copy_preserves_verdict(h in 1usize..4, seed: u64) {
        let mut r = rng(seed);
        let a = mixed_observable(h, 5, &mut r);
        let copy = conjugate(&a, &unitary(h, &mut r));
        let sum = direct_sum(&a, &copy, &tol()).unwrap();
        prop_assert_eq!(is_extremal(&sum, &tol()).extremal, is_extremal(&a, &tol()).extremal);
    }

    #[test]
    fn rank_one_with_h_plus_one_outcomes_sum_extremal(h in 2usize..4, seed: u64) {
        let mut r = rng(seed);
        let a = rank_one(h, h + 1, &mut r);
        let b = rank_one(h, h + 1, &mut r);
        prop_assert!(is_extremal(&direct_sum(&a, &b, &tol()).unwrap(), &tol()).extremal);
    }

    #[test]
    fn completion_reaches_maximal_family(h in 2usize..4, seed: u64) {
        let t = tol();
        let mut r = rng(seed);
        let d = r.random_range(1..h);
        // A random subspace and its orthogonal complement.
        let u = unitary(h, &mut r);
        let bases = vec![u.columns(0, d).into_owned(), u.columns(d, h - d).into_owned()];
        let mut fam = SubspaceFamily::from_bases(h, bases, &t).unwrap();
        let mut steps = 0;
        while !fam.is_maximal() {
            fam = complete_family(&fam, &t).unwrap();
            prop_assert!(fam.is_independent(&t));
            let obs = from_subspaces(&fam, &t).unwrap();
            prop_assert_eq!(obs.ranks(&t), fam.dims());
            prop_assert!(is_extremal(&obs, &t).extremal);
            steps += 1;
            prop_assert!(steps <= h * h);
        }
        prop_assert_eq!(fam.square_sum(), h * h);
    }

    #[test]
    fn reduction_reassembles(h in 1usize..4, seed: u64) {
        let t = tol();
        let mut r = rng(seed);
        let a = mixed_observable(h, 4, &mut r);
        let b = conjugate(&direct_sum(&a, &sharp(1, a.outcomes(), &mut r), &t).unwrap(), &random_unitary(h + 1, r.random()));
        let red = reduce(&b, &t);
        let back = red.reassemble();
        prop_assert!(back.iter().zip(b.effects()).all(|(x, y)| matcore::max_abs_diff(x, y) <= 1e-8));
        for f in &red.factors {
            prop_assert_eq!(reduce(f, &t).m(), 1);
        }
    }

    #[test]
    fn factors_of_extremal_are_extremal(h in 1usize..4, seed: u64) {
        let t = tol();
        let mut r = rng(seed);
        let a = extremal_observable(h, &mut r);
        let b = sharp(1, a.outcomes(), &mut r);
        let sum = direct_sum(&a, &b, &t).unwrap();
        prop_assume!(is_extremal(&sum, &t).extremal);
        for f in &reduce(&sum, &t).factors {
            prop_assert!(is_extremal(f, &t).extremal);
        }
    }

    #[test]
    fn rank_one_irreducibility_agrees(h in 1usize..4, extra in 0usize..4, seed: u64) {
        let t = tol();
        let mut r = rng(seed);
        let obs = if h == 1 || r.random_range(0..2) == 0 {
            rank_one(h, h + extra, &mut r)
        } else {
            // Reducible: rank-one observables on complementary blocks.
            let k = r.random_range(1..h);
            let a = rank_one(k, k + extra, &mut r);
            let b = rank_one(h - k, h - k + 1, &mut r);
            conjugate(&disjoint_sum(&a, &b, &t).unwrap(), &unitary(h, &mut r))
        };
        let (q_l, _) = rank_one_irreducible_obs(&obs, &t).unwrap();
        prop_assert_eq!(q_l, is_irreducible(&obs, &t));
    }

    #[test]
    fn qubit_rank_one_irreducible_iff_noncommuting(n in 2usize..6, seed: u64) {
        let t = tol();
        let mut r = rng(seed);
        let obs = if r.random_range(0..2) == 0 {
            rank_one(2, n, &mut r)
        } else {
            // Commuting lines: every vector is a multiple of e1 or e2, rotated.
            let u = unitary(2, &mut r);
            let w: Vec<f64> = (0..n).map(|_| r.random_range(0.1..1.0)).collect();
            let side: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { r.random_range(0..2) }).collect();
            let tot = [0, 1].map(|s| (0..n).filter(|&i| side[i] == s).map(|i| w[i]).sum::<f64>());
            let effects = (0..n)
                .map(|i| {
                    let mut d = CMatrix::zeros(2, 2);
                    d[(side[i], side[i])] = c(w[i] / tot[side[i]], 0.0);
                    &u * d * u.adjoint()
                })
                .collect();
            Observable::validate(effects, 2, None, &t).unwrap()
        };
        let ps: Vec<CMatrix> = obs.effects().iter().map(|a| a / a.trace()).collect();
        let noncommuting = ps.iter().any(|p| ps.iter().any(|q| matcore::max_abs(&matcore::commutator(p, q)) > 1e-8));
        prop_assert_eq!(is_irreducible(&obs, &t), noncommuting);
        prop_assert_eq!(rank_one_irreducible_obs(&obs, &t).unwrap().0, noncommuting);
    }

    #[test]
    fn json_round_trip_is_bit_exact(h in 1usize..4, seed: u64) {
        let obs = mixed_observable(h, 5, &mut rng(seed));
        let back = observable_from_str(&observable_to_string(&obs), &tol()).unwrap();
        prop_assert!(back.effects().iter().zip(obs.effects()).all(|(x, y)| x == y));
    }
}

#[test]
fn enumerated_lists_satisfy_constraints() {
    for h in 1..=6 {
        let lists = enumerate_maximal_lists(h);
        for l in &lists {
            assert_eq!(l.dims.iter().map(|d| d * d).sum::<usize>(), h * h, "{l}");
            assert!(rank_constraints(h, &l.dims).is_ok(), "{l}");
        }
        assert!(named_lists(h).iter().all(|n| lists.contains(n)), "h = {h}");
    }
}
