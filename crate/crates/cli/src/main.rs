use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use povm_core::constructions::{
    complete_family, direct_sum, disjoint_sum, from_subspaces, maximal_resolution, partial_resolution,
    tensor_product,
};
use povm_core::io::{
    matrix_to_json, parse_family_file, parse_matrix_file, parse_observable_file, FamilyFile, MatrixFile,
    ObservableFile, ToleranceOverrides,
};
use povm_core::rankprob::{enumerate_maximal_lists, named_lists, rank_table, Realizer};
use povm_core::reduction::reduce;
use povm_core::repro::{direct_sum_experiment, run_repro, DEFAULT_BUDGET, DEFAULT_SEED};
use povm_core::{
    from_gram, is_extremal, Observable, PovmError, RankList, RankOneForm, SubspaceFamily,
    ToleranceConfig,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "povm", version, about = "Extremality tools for finite-outcome quantum observables")]
struct Cli {
    /// Tolerance override as key=value (rank_rel_tol, equality_abs_tol, psd_eig_floor); repeatable.
    #[arg(long = "tolerance", global = true, value_name = "KEY=VALUE")]
    tolerance: Vec<String>,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a file holds a valid observable.
    Validate { file: PathBuf },
    /// Decide extremality; optionally write a perturbation witness.
    Extremal {
        file: PathBuf,
        #[arg(long, value_name = "OUT")]
        witness: Option<PathBuf>,
    },
    /// Gram matrix of a rank-one observable.
    Gram {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Rank-one observable from a Gram matrix (projector with positive diagonal).
    FromGram {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Split into irreducible factors, one observable file per factor.
    Reduce {
        file: PathBuf,
        /// Directory for factor_<k>.json files.
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Build observables or subspace families.
    Construct {
        #[command(subcommand)]
        kind: Construct,
    },
    /// Rank lists of extremal observables.
    Ranks {
        #[command(subcommand)]
        action: Ranks,
    },
    /// Run every golden check and print the report.
    Repro {
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Monte Carlo experiments (reported, never asserted).
    Experiment {
        #[command(subcommand)]
        kind: Experiment,
    },
}

#[derive(Args)]
struct Output {
    /// Write the document here instead of stdout.
    #[arg(short, long, value_name = "OUT")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Construct {
    /// A_i ⊕ B_i on the sum of the two spaces.
    DirectSum { a: PathBuf, b: PathBuf, #[command(flatten)] out: Output },
    /// Outcomes of A then outcomes of B, on the sum of the two spaces.
    DisjointSum { a: PathBuf, b: PathBuf, #[command(flatten)] out: Output },
    /// A_i ⊗ B_j, outcomes in row-major (i, j) order.
    Tensor { a: PathBuf, b: PathBuf, #[command(flatten)] out: Output },
    /// Split one spectral term off a component, or resolve everything into rank one.
    Resolve {
        file: PathBuf,
        #[arg(long, required_unless_present = "maximal")]
        outcome: Option<usize>,
        #[arg(long, default_value_t = 0)]
        term: usize,
        #[arg(long, conflicts_with = "outcome")]
        maximal: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Extremal observable with prescribed ranges from an independent family.
    FromSubspaces { family: PathBuf, #[command(flatten)] out: Output },
    /// Add lines to an independent family, one step or up to maximality.
    Complete {
        family: PathBuf,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long)]
        maximal: bool,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum Ranks {
    /// List every maximal rank list for C^h.
    Enumerate {
        #[arg(long)]
        dim: usize,
        /// Also find a certificate for each list.
        #[arg(long)]
        realize: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Find a certified extremal observable with the given ranks.
    Realize {
        #[arg(long)]
        dim: usize,
        /// Comma-separated ranks, e.g. 3,2,2,2,2.
        #[arg(long)]
        list: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        /// Write the subspace family here.
        #[arg(long, value_name = "OUT")]
        family_out: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// How often is the direct sum of two random rank-one observables extremal?
    DirectSum {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        outcomes: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

/// Exit status carried through `?`.
#[derive(Debug)]
struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    fn input(message: impl Display) -> Self {
        Self { code: 2, message: message.to_string() }
    }

    fn negative(message: impl Display) -> Self {
        Self { code: 1, message: message.to_string() }
    }
}

impl From<PovmError> for Fail {
    fn from(e: PovmError) -> Self {
        let code = if matches!(e, PovmError::Numerical(_)) { 3 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

type Outcome = Result<(), Fail>;

struct Ctx {
    overrides: ToleranceOverrides,
    seed: u64,
    json: bool,
}

impl Ctx {
    /// Defaults, then the file's own overrides, then the command line.
    fn tolerance(&self, file: Option<ToleranceOverrides>) -> Result<ToleranceConfig, Fail> {
        let base = file.unwrap_or_default().apply(&ToleranceConfig::default());
        let tol = self.overrides.apply(&base);
        tol.validate()?;
        Ok(tol)
    }

    /// Prints `value` as JSON, or `text` otherwise.
    fn report(&self, value: Value, text: impl FnOnce() -> String) {
        if self.json {
            say(&to_json(&value));
        } else {
            say(&text());
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Fail::input(format!("{}: {e}", path.display())))
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes") + "\n"
}

fn load_observable(ctx: &Ctx, path: &Path) -> Result<(Observable, ToleranceConfig), Fail> {
    let file = parse_observable_file(&read(path)?)?;
    let tol = ctx.tolerance(file.tolerance)?;
    let obs = file.to_observable(&tol)?;
    Ok((obs, tol))
}

fn load_family(ctx: &Ctx, path: &Path) -> Result<(SubspaceFamily, ToleranceConfig), Fail> {
    let tol = ctx.tolerance(None)?;
    let family = parse_family_file(&read(path)?)?.to_family(&tol)?;
    Ok((family, tol))
}

/// Sends a document to `--output` (with a one-line note) or to stdout.
fn emit(ctx: &Ctx, out: &Output, document: String, summary: Value) -> Outcome {
    match &out.output {
        Some(path) => {
            write(path, &document)?;
            let mut summary = summary;
            summary["output"] = json!(path.display().to_string());
            ctx.report(summary.clone(), || format!("wrote {}\n", path.display()));
        }
        None => say(&document),
    }
    Ok(())
}

fn emit_observable(ctx: &Ctx, out: &Output, obs: &Observable, tol: &ToleranceConfig) -> Outcome {
    let summary = json!({ "dim": obs.dim(), "outcomes": obs.outcomes(), "ranks": obs.ranks(tol) });
    emit(ctx, out, to_json(&ObservableFile::from_observable(obs)), summary)
}

fn cmd_validate(ctx: &Ctx, path: &Path) -> Outcome {
    let file = parse_observable_file(&read(path)?)?;
    let tol = ctx.tolerance(file.tolerance)?;
    // Shape problems are input errors; failed constraints are a negative verdict.
    let effects = file.effect_matrices()?;
    match Observable::validate(effects, file.dim, file.labels.clone(), &tol) {
        Ok(obs) => {
            let ranks = obs.ranks(&tol);
            ctx.report(
                json!({ "valid": true, "dim": obs.dim(), "outcomes": obs.outcomes(), "ranks": ranks, "sharp": obs.is_sharp(&tol) }),
                || format!("valid: h = {}, N = {}, ranks {:?}\n", obs.dim(), obs.outcomes(), ranks),
            );
            Ok(())
        }
        Err(e @ (PovmError::ShapeMismatch(_) | PovmError::NotSquare { .. } | PovmError::DimensionMismatch(_))) => {
            Err(e.into())
        }
        Err(e) => {
            ctx.report(json!({ "valid": false, "reason": e.to_string() }), || format!("invalid: {e}\n"));
            Err(Fail::negative(""))
        }
    }
}

fn cmd_extremal(ctx: &Ctx, path: &Path, witness: Option<&Path>) -> Outcome {
    let (obs, tol) = load_observable(ctx, path)?;
    let v = is_extremal(&obs, &tol);
    let mut written = None;
    if let (Some(out), Some(d)) = (witness, &v.witness) {
        let doc = json!({ "dim": obs.dim(), "perturbation": d.iter().map(matrix_to_json).collect::<Vec<_>>() });
        write(out, &to_json(&doc))?;
        written = Some(out.display().to_string());
    }
    ctx.report(
        json!({
            "extremal": v.extremal,
            "min_eigenvalue": v.min_eigenvalue,
            "max_eigenvalue": v.max_eigenvalue,
            "threshold": v.threshold,
            "ranks": obs.ranks(&tol),
            "witness": written,
        }),
        || {
            let mut s = format!(
                "{}: min eigenvalue of H {:.6e} (threshold {:.3e}, max {:.6e})\n",
                if v.extremal { "extremal" } else { "not extremal" },
                v.min_eigenvalue,
                v.threshold,
                v.max_eigenvalue
            );
            if let Some(w) = &written {
                s += &format!("witness written to {w}\n");
            }
            s
        },
    );
    if v.extremal {
        Ok(())
    } else {
        Err(Fail::negative(""))
    }
}

fn cmd_gram(ctx: &Ctx, path: &Path, out: &Output) -> Outcome {
    let (obs, tol) = load_observable(ctx, path)?;
    let form = RankOneForm::from_observable(&obs, &tol)?;
    let g = form.gram_matrix();
    let summary = json!({ "size": g.size(), "trace": g.trace(), "idempotency_defect": g.idempotency_defect() });
    emit(ctx, out, to_json(&MatrixFile::from_matrix(g.entries())), summary)
}

fn cmd_from_gram(ctx: &Ctx, path: &Path, out: &Output) -> Outcome {
    let tol = ctx.tolerance(None)?;
    let m = parse_matrix_file(&read(path)?)?.to_matrix()?;
    let obs = from_gram(&m, &tol)?.to_observable(&tol)?;
    emit_observable(ctx, out, &obs, &tol)
}

fn cmd_reduce(ctx: &Ctx, path: &Path, out_dir: Option<&Path>) -> Outcome {
    let (obs, tol) = load_observable(ctx, path)?;
    let r = reduce(&obs, &tol);
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Fail::input(format!("{}: {e}", dir.display())))?;
        for (k, f) in r.factors.iter().enumerate() {
            let p = dir.join(format!("factor_{k}.json"));
            write(&p, &to_json(&ObservableFile::from_observable(f)))?;
            files.push(p.display().to_string());
        }
    }
    let factors: Vec<Value> = r
        .factors
        .iter()
        .map(|f| json!({ "dim": f.dim(), "ranks": f.ranks(&tol), "extremal": is_extremal(f, &tol).extremal }))
        .collect();
    ctx.report(
        json!({
            "factors": r.m(),
            "factor_dims": r.factor_dims(),
            "algebra_dim": r.algebra_dim,
            "center_dim": r.center_dim,
            "details": factors,
            "files": files,
        }),
        || {
            let mut s = format!(
                "{} factor(s), dims {:?}; generated algebra dim {}, center dim {}\n",
                r.m(),
                r.factor_dims(),
                r.algebra_dim,
                r.center_dim
            );
            for (k, f) in factors.iter().enumerate() {
                s += &format!("  factor {k}: {f}\n");
            }
            for p in &files {
                s += &format!("wrote {p}\n");
            }
            s
        },
    );
    Ok(())
}

fn cmd_construct(ctx: &Ctx, kind: &Construct) -> Outcome {
    let pair = |a: &Path, b: &Path| -> Result<(Observable, Observable, ToleranceConfig), Fail> {
        let (a, ta) = load_observable(ctx, a)?;
        let (b, _) = load_observable(ctx, b)?;
        Ok((a, b, ta))
    };
    match kind {
        Construct::DirectSum { a, b, out } => {
            let (a, b, tol) = pair(a, b)?;
            emit_observable(ctx, out, &direct_sum(&a, &b, &tol)?, &tol)
        }
        Construct::DisjointSum { a, b, out } => {
            let (a, b, tol) = pair(a, b)?;
            emit_observable(ctx, out, &disjoint_sum(&a, &b, &tol)?, &tol)
        }
        Construct::Tensor { a, b, out } => {
            let (a, b, tol) = pair(a, b)?;
            emit_observable(ctx, out, &tensor_product(&a, &b, &tol)?, &tol)
        }
        Construct::Resolve { file, outcome, term, maximal, out } => {
            let (a, tol) = load_observable(ctx, file)?;
            let r = match (maximal, outcome) {
                (true, _) => maximal_resolution(&a, &tol)?,
                (false, Some(i)) => partial_resolution(&a, *i, *term, &tol)?,
                (false, None) => return Err(Fail::input("--outcome or --maximal is required")),
            };
            emit_observable(ctx, out, &r, &tol)
        }
        Construct::FromSubspaces { family, out } => {
            let (fam, tol) = load_family(ctx, family)?;
            emit_observable(ctx, out, &from_subspaces(&fam, &tol)?, &tol)
        }
        Construct::Complete { family, steps, maximal, out } => {
            let (mut fam, tol) = load_family(ctx, family)?;
            let h = fam.ambient_dim();
            let mut taken = 0;
            while (*maximal || taken < *steps) && fam.square_sum() < h * h {
                fam = complete_family(&fam, &tol)?;
                taken += 1;
            }
            let summary = json!({ "dim": h, "dims": fam.dims(), "steps": taken, "maximal": fam.is_maximal() });
            emit(ctx, out, to_json(&FamilyFile::from_family(&fam)), summary)
        }
    }
}

fn parse_list(h: usize, text: &str) -> Result<RankList, Fail> {
    let dims = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Fail::input(format!("bad rank '{s}' in --list"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RankList::new(h, dims))
}

fn cmd_ranks(ctx: &Ctx, action: &Ranks) -> Outcome {
    let tol = ctx.tolerance(None)?;
    match action {
        Ranks::Enumerate { dim, realize: false, .. } => {
            let named = named_lists(*dim);
            let lists = enumerate_maximal_lists(*dim);
            let rows: Vec<Value> = lists
                .iter()
                .map(|l| json!({ "list": l.to_string(), "dims": l.dims, "named": named.contains(l) }))
                .collect();
            ctx.report(json!({ "h": dim, "lists": rows }), || {
                let mut s = format!("h = {dim}: {} maximal lists\n", lists.len());
                for l in &lists {
                    s += &format!("  {:<14} {}\n", l.to_string(), if named.contains(l) { "named" } else { "discovered" });
                }
                s
            });
            Ok(())
        }
        Ranks::Enumerate { dim, realize: true, budget } => {
            let tables = rank_table(*dim, ctx.seed, *budget, &tol);
            let table = tables.last().ok_or_else(|| Fail::input("--dim must be at least 1"))?;
            ctx.report(serde_json::to_value(table).expect("plain data serializes"), || {
                let mut s = format!("h = {dim}: {} maximal lists\n", table.rows.len());
                for r in &table.rows {
                    let kind = r.certificate.map_or("unresolved".to_string(), |k| k.to_string());
                    s += &format!(
                        "  {:<14} {:<10} {:<18} {}\n",
                        r.list,
                        if r.named { "named" } else { "discovered" },
                        kind,
                        r.description.as_deref().unwrap_or("")
                    );
                }
                s
            });
            if table.unresolved() > 0 {
                return Err(Fail::negative(""));
            }
            Ok(())
        }
        Ranks::Realize { dim, list, budget, family_out, out } => {
            let list = parse_list(*dim, list)?;
            let Some(cert) = Realizer::new(ctx.seed, *budget, &tol).realize(&list)? else {
                ctx.report(json!({ "list": list.to_string(), "certificate": null }), || {
                    format!("{list}: no certificate found within budget {budget}\n")
                });
                return Err(Fail::negative(""));
            };
            if let Some(p) = family_out {
                write(p, &to_json(&FamilyFile::from_family(&cert.family)))?;
            }
            let summary = json!({
                "list": cert.list.to_string(),
                "kind": cert.kind,
                "description": cert.description,
                "verified": cert.verified,
                "ranks": cert.observable.ranks(&tol),
            });
            if out.output.is_some() || ctx.json {
                let doc = to_json(&ObservableFile::from_observable(&cert.observable));
                emit(ctx, out, doc, summary)?;
            } else {
                say(&format!(
                    "{}: {} ({})\nverified: {}, ranks {:?}\n",
                    cert.list,
                    cert.kind,
                    cert.description,
                    cert.verified,
                    cert.observable.ranks(&tol)
                ));
            }
            if cert.verified {
                Ok(())
            } else {
                Err(Fail { code: 3, message: "certificate failed verification".into() })
            }
        }
    }
}

fn cmd_repro(ctx: &Ctx, budget: usize) -> Outcome {
    let tol = ctx.tolerance(None)?;
    let report = run_repro(ctx.seed, budget, &tol);
    ctx.report(serde_json::to_value(&report).expect("plain data serializes"), || report.to_text());
    if report.passed() {
        Ok(())
    } else {
        Err(Fail::negative("golden checks failed"))
    }
}

fn cmd_experiment(ctx: &Ctx, kind: &Experiment) -> Outcome {
    let tol = ctx.tolerance(None)?;
    let Experiment::DirectSum { dim, outcomes, trials } = kind;
    let r = direct_sum_experiment(*dim, *outcomes, *trials, ctx.seed, &tol)?;
    ctx.report(serde_json::to_value(&r).expect("plain data serializes"), || {
        format!(
            "h = {}, N = {}: {} of {} direct sums extremal; smallest margin {:.3e}\n",
            r.h, r.outcomes, r.extremal, r.trials, r.smallest_margin
        )
    });
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let mut overrides = ToleranceOverrides::default();
    for t in &cli.tolerance {
        overrides.set(t)?;
    }
    let ctx = Ctx { overrides, seed: cli.seed, json: cli.json };
    match &cli.command {
        Command::Validate { file } => cmd_validate(&ctx, file),
        Command::Extremal { file, witness } => cmd_extremal(&ctx, file, witness.as_deref()),
        Command::Gram { file, out } => cmd_gram(&ctx, file, out),
        Command::FromGram { file, out } => cmd_from_gram(&ctx, file, out),
        Command::Reduce { file, out_dir } => cmd_reduce(&ctx, file, out_dir.as_deref()),
        Command::Construct { kind } => cmd_construct(&ctx, kind),
        Command::Ranks { action } => cmd_ranks(&ctx, action),
        Command::Repro { budget } => cmd_repro(&ctx, *budget),
        Command::Experiment { kind } => cmd_experiment(&ctx, kind),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_lists_parse() {
        let l = parse_list(5, "2, 3,2,2,2").unwrap();
        assert_eq!(l.dims, vec![3, 2, 2, 2, 2]);
        assert!(parse_list(5, "3,x").is_err());
    }

    #[test]
    fn numerical_errors_map_to_three() {
        assert_eq!(Fail::from(PovmError::Numerical("x".into())).code, 3);
        assert_eq!(Fail::from(PovmError::NotIndependent).code, 2);
    }

    #[test]
    fn command_line_overrides_file_tolerance() {
        let mut overrides = ToleranceOverrides::default();
        overrides.set("rank_rel_tol=1e-8").unwrap();
        let ctx = Ctx { overrides, seed: 0, json: false };
        let file = ToleranceOverrides { rank_rel_tol: Some(1e-6), equality_abs_tol: Some(1e-7), psd_eig_floor: None };
        let tol = ctx.tolerance(Some(file)).unwrap();
        assert_eq!(tol.rank_rel_tol, 1e-8);
        assert_eq!(tol.equality_abs_tol, 1e-7);
    }
}
