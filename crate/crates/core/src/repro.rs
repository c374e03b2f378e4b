//! Golden checks for every explicit artifact, aggregated into one report.

use std::fmt::Write as _;

use serde::Serialize;

use crate::constructions::{direct_sum, from_subspaces, random::random_rank_one, SubspaceFamily};
use crate::error::Result;
use crate::extremality::{direct_sum_r_block, is_extremal};
use crate::fixtures;
use crate::matcore::{self, char_poly, hermitian_eig, is_projector, CMatrix, ToleranceConfig};
use crate::rankprob::{enumerate_maximal_lists, named_lists, rank_table, verify_eleven_vector_certificate, ElevenVectorReport, RankTable};

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_BUDGET: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub checks: Vec<Check>,
    pub eleven_vector: Option<ElevenVectorReport>,
    pub rank_tables: Vec<RankTable>,
}

impl ReproReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "[{}] {:<40} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        for t in &self.rank_tables {
            let _ = writeln!(s, "\nh = {} ({} maximal lists)", t.h, t.rows.len());
            for r in &t.rows {
                let kind = r.certificate.map_or("unresolved".to_string(), |k| k.to_string());
                let origin = if r.named { "named" } else { "discovered" };
                let _ = writeln!(
                    s,
                    "  {:<14} {:<10} {:<18} {}",
                    r.list,
                    origin,
                    kind,
                    r.description.as_deref().unwrap_or("")
                );
            }
        }
        s
    }
}

fn record(checks: &mut Vec<Check>, name: &str, outcome: Result<(bool, String)>) {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    checks.push(Check { name: name.into(), passed, detail });
}

fn counterexample_checks(checks: &mut Vec<Check>, tol: &ToleranceConfig) {
    let e = fixtures::counterexample_e();
    let f = fixtures::tetrahedron();
    record(checks, "qubit pair: e valid and extremal", (|| {
        let v = is_extremal(&e.to_observable(tol)?, tol);
        Ok((v.extremal && v.min_eigenvalue > 1e-8, format!("min eig of H = {:.6}", v.min_eigenvalue)))
    })());
    record(checks, "qubit pair: f valid and extremal", (|| {
        let v = is_extremal(&f.to_observable(tol)?, tol);
        Ok((v.extremal && v.min_eigenvalue > 1e-8, format!("min eig of H = {:.6}", v.min_eigenvalue)))
    })());
    record(checks, "qubit pair: R characteristic polynomial", (|| {
        let r = direct_sum_r_block(&e, &f, tol)?;
        let p = char_poly(&r)?;
        let dev = p
            .iter()
            .zip(fixtures::R_BLOCK_CHAR_POLY_X256)
            .map(|(got, want)| (got - matcore::c(want / 256.0, 0.0)).norm())
            .fold(0.0, f64::max);
        let coeffs: Vec<String> = p.iter().map(|z| format!("{:.6}", z.re * 256.0)).collect();
        Ok((dev <= 1e-9, format!("256 x coeffs = [{}], max dev {dev:.2e}", coeffs.join(", "))))
    })());
    record(checks, "qubit pair: R has eigenvalue 0", (|| {
        let r = direct_sum_r_block(&e, &f, tol)?;
        let eig = hermitian_eig(&r, &ToleranceConfig { equality_abs_tol: 1e-8, ..*tol })?;
        let smallest = eig.values.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        Ok((smallest < 1e-9, format!("eigenvalues {:?}", eig.values.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>())))
    })());
    record(checks, "qubit pair: direct sum not extremal", (|| {
        let sum = direct_sum(&e.to_observable(tol)?, &f.to_observable(tol)?, tol)?;
        let v = is_extremal(&sum, tol);
        Ok((!v.extremal && v.witness.is_some(), format!("min eig of H = {:.2e}", v.min_eigenvalue)))
    })());
}

fn worked_example_checks(checks: &mut Vec<Check>, tol: &ToleranceConfig) {
    record(checks, "h=3 example: stated first projector", (|| {
        let p = &fixtures::stated_worked_projectors()[0];
        let idem = is_projector(p, tol)?;
        Ok((!idem, "stated matrix is not idempotent; span{e1,e2} used instead".into()))
    })());
    record(checks, "h=3 example: stated effects", (|| {
        let stated = fixtures::stated_worked_effects();
        let sum = stated.iter().fold(CMatrix::zeros(3, 3), |acc, a| acc + a);
        let entry = sum[(2, 2)].re;
        let want = (36.0 + 12.0 * 6f64.sqrt()) / 50.0;
        Ok(((entry - want).abs() < 1e-12, format!("stated sum has (3,3) entry {entry:.6} != 1")))
    })());
    record(checks, "h=3 example: rebuilt (2,1,1) observable", (|| {
        let fam = SubspaceFamily::from_bases(3, fixtures::worked_example_bases(), tol)?;
        let obs = from_subspaces(&fam, tol)?;
        let stated = fixtures::stated_worked_effects();
        let mut a1 = stated[0].clone();
        a1[(2, 2)] = matcore::c(fixtures::worked_example_a1_33(), 0.0);
        let dev = [a1, stated[1].clone(), stated[2].clone()]
            .iter()
            .zip(obs.effects())
            .map(|(x, y)| matcore::max_abs_diff(x, y))
            .fold(0.0, f64::max);
        let ok = obs.ranks(tol) == [2, 1, 1] && is_extremal(&obs, tol).extremal && dev < 1e-12;
        Ok((ok, format!("matches stated entries except A1(3,3) = (14-4*sqrt6)/25; max dev {dev:.1e}")))
    })());
}

/// Runs every check; failures are recorded, never propagated.
pub fn run_repro(seed: u64, budget: usize, tol: &ToleranceConfig) -> ReproReport {
    let mut checks = Vec::new();
    counterexample_checks(&mut checks, tol);

    let r2 = verify_eleven_vector_certificate(tol);
    record(&mut checks, "11-vector family: det H = 1024", match &r2 {
        Ok(r) => Ok((r.passed(), format!("exact {}, float {:.9}", r.det_exact, r.det_float_re))),
        Err(e) => Err(e.clone()),
    });

    let tables = rank_table(5, seed, budget, tol);
    for t in tables.iter().skip(1) {
        let expected = [0, 1, 2, 3, 7, 14][t.h];
        let named = named_lists(t.h);
        let all_named = named.iter().all(|l| enumerate_maximal_lists(t.h).contains(l));
        record(&mut checks, &format!("rank table h={}", t.h), Ok((
            t.rows.len() == expected && all_named && t.unresolved() == 0,
            format!("{} lists ({} named), {} unresolved", t.rows.len(), named.len(), t.unresolved()),
        )));
    }

    worked_example_checks(&mut checks, tol);
    ReproReport { checks, eleven_vector: r2.ok(), rank_tables: tables.into_iter().skip(1).collect() }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectSumExperiment {
    pub h: usize,
    pub outcomes: usize,
    pub trials: usize,
    pub extremal: usize,
    pub smallest_margin: f64,
}

/// Monte Carlo: how often is the direct sum of two random rank-one
/// observables extremal? Reported only.
pub fn direct_sum_experiment(h: usize, outcomes: usize, trials: usize, seed: u64, tol: &ToleranceConfig) -> Result<DirectSumExperiment> {
    let mut extremal = 0;
    let mut smallest_margin = f64::INFINITY;
    for t in 0..trials as u64 {
        let a = random_rank_one(h, outcomes, seed.wrapping_add(2 * t), tol)?.to_observable(tol)?;
        let b = random_rank_one(h, outcomes, seed.wrapping_add(2 * t + 1), tol)?.to_observable(tol)?;
        let v = is_extremal(&direct_sum(&a, &b, tol)?, tol);
        if v.extremal {
            extremal += 1;
        }
        smallest_margin = smallest_margin.min(v.margin());
    }
    Ok(DirectSumExperiment { h, outcomes, trials, extremal, smallest_margin })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_runs() {
        let r = direct_sum_experiment(2, 3, 4, 1, &ToleranceConfig::default()).unwrap();
        assert_eq!(r.trials, 4);
        assert!(r.extremal <= 4);
    }
}
