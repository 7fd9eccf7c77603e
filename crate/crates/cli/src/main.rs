//! `rootsum` experiment runner.
//!
//! Every subcommand reads one TOML config and writes its results to `--out`.
//! Exit codes: 0 success, 2 config error, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use rootsum::abel::{
    default_gap_constant, default_gap_exponent, group_by_gaps, projector_apply, split_order_reduction,
    GroupingScheme,
};
use rootsum::contour::{default_residue_radius, pole_residue, spectral_angle};
use rootsum::corpus::{corpus_rng, random_jordan_spec, random_sectorial};
use rootsum::error::Error;
use rootsum::evolve::{CauchyProblem, CauchySolver, ResidualSettings};
use rootsum::growth::{beta_function, convergence_exponent, example41_sequence, ZeroSequence};
use rootsum::linops::{build_jordan_operator, random_unit_vector, CVector};
use rootsum::symbol::FunctionSpec;

#[derive(Parser)]
#[command(name = "rootsum", version, about = "Root-vector series experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Evaluate time grids and sample sweeps on all cores. Values may then
    /// differ from a serial run in the last ulp.
    #[arg(long, global = true)]
    parallel: bool,
    /// Pass threshold: maximum residual for `solve`, maximum relative
    /// identity error for `verify`.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve a Cauchy problem on a time grid.
    Solve,
    /// Run the invariant suites and write a JSON report.
    Verify,
    /// Dump characteristic numbers and the grouping.
    Spectrum,
    /// Growth analytics of a zero sequence.
    Growth,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    #[serde(default)]
    seed: u64,
    problem: Option<CauchyProblem>,
    #[serde(default)]
    grouping: Option<GroupingConfig>,
    solve: Option<SolveConfig>,
    growth: Option<GrowthConfig>,
    #[serde(default)]
    verify: VerifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum GroupingConfig {
    /// Gap rule; unset values take the defaults derived from the moduli.
    Gaps { sigma: Option<f64>, k: Option<f64> },
    Explicit { splits: Vec<usize> },
    Singletons,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    times: Vec<f64>,
    #[serde(default = "yes")]
    residual: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GrowthConfig {
    sequence: SequenceConfig,
    #[serde(default)]
    exponents: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SequenceConfig {
    /// `a_n = n^exponent`, `n = 1..=count`.
    Power { exponent: f64, count: usize },
    /// Zeros `a_n = min{a ≥ e^e : a^ρ₁/(ln a · ln ln a) ≥ n}`.
    LogCorrected { rho1: f64, count: usize },
    /// Explicit non-decreasing moduli.
    Moduli { values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct VerifyConfig {
    /// Seeded Jordan specs for the residue identity.
    cases: usize,
    /// Random sectorial matrices for the determinant bound.
    matrices: usize,
    /// Sampled λ per matrix.
    samples: usize,
    /// Multiplies the default gap constant `K` of the grouping check.
    gap_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { cases: 20, matrices: 20, samples: 200, gap_scale: 1.0 }
    }
}

/// Failure of a run, mapped onto the exit-code contract.
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::Domain(_)
            | Error::Dimension { .. }
            | Error::NonDecaying { .. }
            | Error::Parse(_)
            | Error::InsufficientData(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(format!("{}: {e}", path.display()))
}

type Run<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !cli.parallel {
        // keeps inner data-parallel sweeps on one thread; a second init only fails
        // when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Run<()> {
    let config = load_config(cli.config.as_deref())?;
    fs::create_dir_all(&cli.out).map_err(|e| io_failure(&cli.out, e))?;
    match cli.command {
        Command::Solve => run_solve(cli, &config),
        Command::Verify => run_verify(cli, &config),
        Command::Spectrum => run_spectrum(cli, &config),
        Command::Growth => run_growth(cli, &config),
    }
}

fn load_config(path: Option<&Path>) -> Run<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Run<()> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Run<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write_file(path, &text)
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Run<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| io_failure(path, e))
}

fn build_solver(config: &RunConfig) -> Run<CauchySolver> {
    let problem = config.problem.as_ref().ok_or_else(|| Failure::Config("missing [problem] section".into()))?;
    let solver = CauchySolver::new(problem).map_err(|e| match Failure::from(e) {
        Failure::Config(m) => Failure::Config(format!("problem: {m}")),
        other => other,
    })?;
    let grouping = match &config.grouping {
        None => return Ok(solver),
        Some(g) => grouping_from_config(g, &solver)?,
    };
    let spec = solver.spec().clone();
    let f = solver.initial().clone();
    CauchySolver::from_spec(spec, solver.phi().clone(), solver.alpha(), f, Some(grouping))
        .map_err(|e| match Failure::from(e) {
            Failure::Config(m) => Failure::Config(format!("grouping: {m}")),
            other => other,
        })
}

fn grouping_from_config(g: &GroupingConfig, solver: &CauchySolver) -> Run<GroupingScheme> {
    let count = solver.spec().eigenvalues().len();
    let scheme = match g {
        GroupingConfig::Singletons => GroupingScheme::singletons(count),
        GroupingConfig::Explicit { splits } => GroupingScheme::explicit(splits.clone())?,
        GroupingConfig::Gaps { sigma, k } => {
            let moduli = sorted_moduli(solver);
            let sigma = sigma.unwrap_or_else(|| default_gap_exponent(&moduli));
            let k = k.unwrap_or_else(|| default_gap_constant(&moduli, sigma));
            group_by_gaps(&moduli, sigma, k)?
        }
    };
    Ok(scheme)
}

fn sorted_moduli(solver: &CauchySolver) -> Vec<f64> {
    let lam = solver.spec().characteristic_numbers();
    solver.spec().characteristic_order().iter().map(|&q| lam[q].norm()).collect()
}

fn run_solve(cli: &Cli, config: &RunConfig) -> Run<()> {
    let section = config.solve.as_ref().ok_or_else(|| Failure::Config("missing [solve] section".into()))?;
    if let Some(t) = section.times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Failure::Config(format!("solve.times: {t} is not a non-negative time")));
    }
    let solver = build_solver(config)?;
    let tol = cli.tol.unwrap_or(1e-4);
    let dim = solver.spec().dim();
    let settings = ResidualSettings::default();

    let row = |t: f64| -> rootsum::error::Result<(CVector, Option<f64>)> {
        let u = solver.solve(t)?;
        let r = if section.residual && t > 0.0 { Some(solver.residual(t, &settings)?) } else { None };
        Ok((u, r))
    };
    let rows: Vec<(CVector, Option<f64>)> = if cli.parallel {
        section.times.par_iter().map(|&t| row(t)).collect::<rootsum::error::Result<_>>()?
    } else {
        section.times.iter().map(|&t| row(t)).collect::<rootsum::error::Result<_>>()?
    };

    let path = cli.out.join("solution.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["t".to_string()];
    for j in 0..dim {
        header.push(format!("u{j}_re"));
        header.push(format!("u{j}_im"));
    }
    header.extend(["norm", "gap", "residual"].map(String::from));
    w.write_record(&header).map_err(|e| io_failure(&path, e))?;
    let f = solver.initial();
    let mut max_residual: Option<f64> = None;
    for (&t, (u, r)) in section.times.iter().zip(&rows) {
        let mut rec = vec![sci(t)];
        for v in u.iter() {
            rec.push(sci(v.re));
            rec.push(sci(v.im));
        }
        rec.push(sci(u.norm()));
        rec.push(sci((u - f).norm()));
        rec.push(r.map(sci).unwrap_or_default());
        w.write_record(&rec).map_err(|e| io_failure(&path, e))?;
        if let Some(r) = r {
            max_residual = Some(max_residual.map_or(*r, |m: f64| m.max(*r)));
        }
    }
    w.flush().map_err(|e| io_failure(&path, e))?;

    let within = max_residual.is_none_or(|m| m <= tol);
    write_json(
        &cli.out.join("summary.json"),
        &json!({
            "rows": rows.len(),
            "dim": dim,
            "groups": solver.grouping().group_count(),
            "max_residual": max_residual,
            "tol": tol,
            "within_tol": within,
        }),
    )?;
    if !within {
        return Err(Failure::Numerical(format!(
            "max residual {:.3e} exceeds tolerance {tol:.3e}",
            max_residual.unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

fn run_spectrum(cli: &Cli, config: &RunConfig) -> Run<()> {
    let solver = build_solver(config)?;
    let spec = solver.spec();
    let lam = spec.characteristic_numbers();
    let order = spec.characteristic_order();
    let grouping = solver.grouping();
    let mut group_of = vec![0; order.len()];
    for nu in 0..grouping.group_count() {
        for pos in grouping.group(nu) {
            group_of[pos] = nu;
        }
    }

    let path = cli.out.join("spectrum.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["position", "re", "im", "modulus", "arg", "chains", "group"]).map_err(|e| io_failure(&path, e))?;
    for (pos, &q) in order.iter().enumerate() {
        let l = lam[q];
        let chains: Vec<String> = spec.chains()[q].iter().map(|c| c.to_string()).collect();
        w.write_record([
            (pos + 1).to_string(),
            sci(l.re),
            sci(l.im),
            sci(l.norm()),
            sci(l.arg()),
            chains.join(";"),
            group_of[pos].to_string(),
        ])
        .map_err(|e| io_failure(&path, e))?;
    }
    w.flush().map_err(|e| io_failure(&path, e))?;

    let path = cli.out.join("grouping.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["group", "first", "last"]).map_err(|e| io_failure(&path, e))?;
    for row in grouping.csv_rows() {
        w.write_record(&row).map_err(|e| io_failure(&path, e))?;
    }
    w.flush().map_err(|e| io_failure(&path, e))?;

    write_json(
        &cli.out.join("spectrum.json"),
        &json!({
            "dim": spec.dim(),
            "characteristic_numbers": order.len(),
            "spectral_angle": spectral_angle(&lam),
            "grouping": grouping,
        }),
    )
}

fn build_sequence(seq: &SequenceConfig) -> Run<ZeroSequence> {
    let z = match seq {
        SequenceConfig::Power { exponent, count } => {
            if !(*exponent > 0.0) {
                return Err(Failure::Config(format!("growth.sequence.exponent must be positive, got {exponent}")));
            }
            ZeroSequence::new((1..=*count).map(|n| (n as f64).powf(*exponent)).collect(), None)?.with_unbounded(true)
        }
        SequenceConfig::LogCorrected { rho1, count } => example41_sequence(*rho1, *count)?.with_unbounded(true),
        SequenceConfig::Moduli { values } => ZeroSequence::new(values.clone(), None)?,
    };
    Ok(z)
}

#[derive(Serialize)]
struct BetaRow {
    r: f64,
    beta: f64,
}

fn run_growth(cli: &Cli, config: &RunConfig) -> Run<()> {
    let section = config.growth.as_ref().ok_or_else(|| Failure::Config("missing [growth] section".into()))?;
    let z = build_sequence(&section.sequence)?;
    let grid = section.exponents.clone().unwrap_or_else(|| (1..=40).map(|k| k as f64 * 0.1).collect());
    let report = convergence_exponent(&z, &grid)?;

    let path = cli.out.join("growth.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["exponent", "partial_sum", "tail_convergent"]).map_err(|e| io_failure(&path, e))?;
    for &l in &grid {
        w.write_record([sci(l), sci(z.partial_sum(l, z.len())), z.tail_convergent(l).to_string()])
            .map_err(|e| io_failure(&path, e))?;
    }
    w.flush().map_err(|e| io_failure(&path, e))?;

    let path = cli.out.join("beta.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["r", "beta"]).map_err(|e| io_failure(&path, e))?;
    for (r, b) in &report.beta_samples {
        w.write_record([sci(*r), sci(*b)]).map_err(|e| io_failure(&path, e))?;
    }
    w.flush().map_err(|e| io_failure(&path, e))?;

    write_json(
        &cli.out.join("growth.json"),
        &json!({
            "terms": z.len(),
            "rho_hat": report.rho_hat,
            "genus": report.genus,
            "diverges_at_rho": report.diverges_at_rho,
            "beta": report.beta_samples.iter().map(|(r, b)| BetaRow { r: *r, beta: *b }).collect::<Vec<_>>(),
        }),
    )
}

/// Outcome of one verification suite.
struct Check {
    name: &'static str,
    pass: bool,
    details: serde_json::Value,
}

fn run_verify(cli: &Cli, config: &RunConfig) -> Run<()> {
    let v = &config.verify;
    if v.cases == 0 || v.matrices == 0 || v.samples == 0 || !(v.gap_scale > 0.0) {
        return Err(Failure::Config("verify: counts must be positive and gap_scale > 0".into()));
    }
    let tol = cli.tol.unwrap_or(1e-8);
    let checks = vec![
        residue_identity(config.seed, v.cases, tol)?,
        det_resolvent(config.seed, v.matrices, v.samples)?,
        gap_grouping(v.gap_scale)?,
        split_table()?,
        beta_decay()?,
    ];
    let all = checks.iter().all(|c| c.pass);
    let report = json!({
        "seed": config.seed,
        "all_pass": all,
        "checks": checks
            .iter()
            .map(|c| json!({ "name": c.name, "pass": c.pass, "details": c.details }))
            .collect::<Vec<_>>(),
    });
    write_json(&cli.out.join("verify.json"), &report)?;
    for c in &checks {
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    if !all {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        return Err(Failure::Numerical(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}

/// Contour residue against the chain formula on seeded Jordan specs.
fn residue_identity(seed: u64, cases: usize, tol: f64) -> Run<Check> {
    let mut rng = corpus_rng(seed);
    let phi = FunctionSpec::identity();
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let dim = rng.gen_range(2..=8);
        let spec = random_jordan_spec(&mut rng, dim, 4, 0.4)?;
        let b = build_jordan_operator(&spec)?;
        let f = random_unit_vector(dim, &mut rng);
        let t = rng.gen_range(0.2..2.0);
        let alpha = rng.gen_range(1.0..2.0);
        let lam = spec.characteristic_numbers();
        for (q, &l) in lam.iter().enumerate() {
            let series = projector_apply(&spec, q, &phi, alpha, t, &f)?;
            let residue = pole_residue(&b, l, &phi, alpha, t, &f, default_residue_radius(&lam, l))?;
            worst = worst.max((&series - &residue).norm() / series.norm().max(1e-12));
        }
    }
    Ok(Check {
        name: "residue_identity",
        pass: worst <= tol,
        details: json!({ "cases": cases, "max_relative_error": worst, "tol": tol }),
    })
}

/// `|Δ(λ)| ‖(I − λB)^{-1}‖ ≤ 2∏(1 + |λ| s_n)` on random sectorial matrices.
fn det_resolvent(seed: u64, matrices: usize, samples: usize) -> Run<Check> {
    let mut rng = corpus_rng(seed.wrapping_add(1));
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..matrices {
        let dim = rng.gen_range(2..=12);
        let theta = rng.gen_range(0.2..1.3);
        let b = random_sectorial(&mut rng, dim, theta)?;
        for _ in 0..samples {
            let lambda = Complex64::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
            let (lhs, rhs) = rootsum::growth::det_resolvent_bound_check(&b, lambda)?;
            let margin = (rhs - lhs) / rhs;
            worst = worst.min(margin);
            if lhs > rhs {
                violations += 1;
            }
        }
    }
    Ok(Check {
        name: "det_resolvent_bound",
        pass: violations == 0,
        details: json!({ "matrices": matrices, "samples": samples, "violations": violations, "min_relative_margin": worst }),
    })
}

/// Gap rule on a perturbed power sequence: certified gaps meet the threshold
/// and no gap inside a group does.
fn gap_grouping(scale: f64) -> Run<Check> {
    let mut moduli: Vec<f64> = (1..=60).map(|n| (n as f64).powf(1.5) * (1.0 + 0.3 * (n as f64).sin())).collect();
    moduli.sort_by(f64::total_cmp);
    let sigma = default_gap_exponent(&moduli);
    let k = default_gap_constant(&moduli, sigma) * scale;
    let g = group_by_gaps(&moduli, sigma, k)?;
    let threshold = |i: usize| k * moduli[i].powf(1.0 - sigma);
    let certified_ok = g.certified_gaps.iter().all(|gap| gap.gap >= gap.threshold);
    let interior_ok = (0..g.group_count())
        .all(|nu| g.group(nu).skip(1).all(|i| moduli[i] - moduli[i - 1] < threshold(i)));
    Ok(Check {
        name: "gap_grouping",
        pass: certified_ok && interior_ok,
        details: json!({
            "sigma": sigma,
            "k": k,
            "groups": g.group_count(),
            "single_group": g.single_group,
            "certified_gaps": g.certified_gaps.len(),
        }),
    })
}

/// Integer split identity and bounds for the tabulated `(β, η)` pairs.
fn split_table() -> Run<Check> {
    let mut failures = Vec::new();
    for (beta, eta) in [(1, 1), (2, 1), (2, 2), (4, 2)] {
        for nu in 1..=50 {
            let row = split_order_reduction(beta, eta, nu)?;
            if !(row.identity_holds() && row.bounds_hold()) {
                failures.push(format!("({beta},{eta}) ν={nu}"));
            }
        }
    }
    let worked = split_order_reduction(1, 1, 3)?.n_0;
    Ok(Check {
        name: "split_table",
        pass: failures.is_empty() && worked == 10,
        details: json!({ "failures": failures, "n0_at_nu3": worked }),
    })
}

/// `β(r)` decreases for `a_n = n²` (`ρ = 1/2`) measured with `ρ₁ = 0.8`.
fn beta_decay() -> Run<Check> {
    let z = ZeroSequence::new((1..=100_000).map(|n| (n as f64).powi(2)).collect(), None)?.with_unbounded(true);
    let values = (2..=8)
        .map(|k| beta_function(&z, 10f64.powi(k), 0, 0.8, 0.5).map(|b| b.value))
        .collect::<rootsum::error::Result<Vec<f64>>>()?;
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    Ok(Check { name: "beta_decay", pass: decreasing, details: json!({ "radii_log10": (2..=8).collect::<Vec<_>>(), "beta": values }) })
}
