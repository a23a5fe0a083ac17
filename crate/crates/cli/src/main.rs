//! Command-line front end for twisted L²-torsion computations.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde::Serialize;
use serde_json::{json, Value};

use l2torsion::catalog::{self, CatalogEntry};
use l2torsion::degree::{compare_thurston, degree_exact, degree_numeric, lawton_demo, tower_study, ThurstonValue, Verdict};
use l2torsion::fkdet::{FkOptions, NumericOptions};
use l2torsion::foxcalc::{square_matrix_boundary, SquareMatrixData, SquareMatrixSpec};
use l2torsion::fpgroup::{CohomClass, HomSpec, Presentation, PresentationSpec, QuotientHom};
use l2torsion::torsion::{
    bound_fuzz, check_pinching, check_scaling, check_symmetry, default_grid, parse_grid, rho_eval, TorsionSetup,
};
use l2torsion::Error;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug, Serialize)]
#[command(name = "l2torsion", version, about = "Twisted L2-torsion functions of 3-manifold groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Sample rho(t) on a grid and write CSV.
    Eval(RunArgs),
    /// Degree of rho and comparison with the Thurston norm.
    Degree(RunArgs),
    /// Scaling, symmetry, pinching and determinant-bound suites.
    Check(RunArgs),
    /// Approximation along a tower of finite quotients.
    Tower(TowerArgs),
    /// List the built-in manifolds as JSON.
    Catalog(OutputArgs),
}

#[derive(clap::Args, Debug, Serialize)]
struct RunArgs {
    /// Catalog name or path to a JSON presentation / square-matrix file.
    #[arg(long)]
    manifold: String,
    /// `abelian` or path to a JSON homomorphism spec.
    #[arg(long, default_value = "abelian")]
    quotient: String,
    /// Comma-separated weights of the class, rationals allowed.
    #[arg(long, default_value = "1")]
    phi: String,
    /// Sampling grid `log:a:b:n`.
    #[arg(long)]
    grid: Option<String>,
    /// Numeric integration tolerance.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Seed for the randomized bound suite.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Demo {
    Lawton,
}

#[derive(clap::Args, Debug, Serialize)]
struct TowerArgs {
    #[arg(long, value_enum, default_value = "lawton")]
    demo: Demo,
    /// Levels 0..=N of the chain.
    #[arg(long, default_value_t = 7)]
    levels: usize,
    /// Sampling grid `log:a:b:n`; defaults to t in {0.5, 1, 2}.
    #[arg(long)]
    grid: Option<String>,
    /// Numeric integration tolerance for the limit.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Largest admissible final-level gap.
    #[arg(long, default_value_t = 1e-2)]
    gap_tol: f64,
    /// Write the level CSV here in addition to the JSON report.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputArgs,
}

#[derive(clap::Args, Debug, Serialize)]
struct OutputArgs {
    /// Output path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    NonAcyclic(Value),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonAcyclic(cert) => Failure::NonAcyclic(json!({ "error": "non-acyclic", "certificate": cert })),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("TORSION_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::NonAcyclic(v)) => {
            eprintln!("{v}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Eval(args) => eval(args),
        Command::Degree(args) => degree(cli, args),
        Command::Check(args) => check(cli, args),
        Command::Tower(args) => tower(cli, args),
        Command::Catalog(out) => {
            let records = catalog::export()?;
            emit_json(out, &json!({ "schema_version": SCHEMA_VERSION, "config": cli, "entries": records }))?;
            Ok(true)
        }
    }
}

fn emit(out: &OutputArgs, bytes: &[u8]) -> std::io::Result<()> {
    match &out.output {
        Some(path) => fs::write(path, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}

fn emit_json(out: &OutputArgs, value: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    emit(out, text.as_bytes())
}

struct Loaded {
    setup: TorsionSetup,
    entry: Option<CatalogEntry>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_phi(text: &str) -> std::result::Result<CohomClass, Failure> {
    let weights = text
        .split(',')
        .map(|s| s.trim().parse::<Rational64>().map_err(|_| usage(format!("bad weight `{s}` in --phi"))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(CohomClass::new(weights))
}

fn read_json(path: &str) -> std::result::Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{path}: {e}")))
}

fn load(args: &RunArgs) -> std::result::Result<Loaded, Failure> {
    if !(args.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let (data, entry): (SquareMatrixData, Option<CatalogEntry>) = match catalog::lookup(&args.manifold) {
        Ok(entry) => (square_matrix_boundary(&entry.presentation())?, Some(entry)),
        Err(_) => {
            let value = read_json(&args.manifold)?;
            let data = if value.get("matrix").is_some() {
                let spec: SquareMatrixSpec = serde_json::from_value(value).map_err(|e| usage(e.to_string()))?;
                SquareMatrixData::from_spec(&spec)?
            } else {
                let spec: PresentationSpec = serde_json::from_value(value).map_err(|e| usage(e.to_string()))?;
                square_matrix_boundary(&Presentation::from_spec(&spec)?)?
            };
            (data, None)
        }
    };
    let p = &data.presentation;
    let hom = if args.quotient == "abelian" {
        QuotientHom::abelian(p)
    } else {
        let spec: HomSpec = serde_json::from_value(read_json(&args.quotient)?).map_err(|e| usage(e.to_string()))?;
        QuotientHom::from_spec(p, &spec)?
    };
    let phi = parse_phi(&args.phi)?;
    let opts = FkOptions { numeric: NumericOptions { tol: args.tol, ..NumericOptions::default() }, ..FkOptions::default() };
    let setup = TorsionSetup::with_options(data, hom, phi, opts)?;
    Ok(Loaded { setup, entry })
}

fn grid_of(spec: &Option<String>) -> std::result::Result<Vec<f64>, Failure> {
    match spec {
        Some(s) => Ok(parse_grid(s)?),
        None => Ok(default_grid()),
    }
}

fn eval(args: &RunArgs) -> Outcome {
    let loaded = load(args)?;
    let samples = rho_eval(&loaded.setup, &grid_of(&args.grid)?)?;
    let mut buf = Vec::new();
    samples.write_csv(&mut buf)?;
    emit(&args.out, &buf)?;
    Ok(true)
}

fn degree(cli: &Cli, args: &RunArgs) -> Outcome {
    let loaded = load(args)?;
    let setup = &loaded.setup;
    let result = if setup.is_exact()? {
        degree_exact(setup)?
    } else {
        degree_numeric(&rho_eval(setup, &grid_of(&args.grid)?)?)?
    };
    let tol = if result.exact { 1e-9 } else { 0.05 };
    let thurston = match &loaded.entry {
        Some(entry) => {
            let x = catalog::thurston_oracle(entry, setup.phi())?;
            let verdict = compare_thurston(&result, ThurstonValue { x, excluded: entry.excluded }, tol);
            json!({ "x": x.to_string(), "verdict": verdict })
        }
        None => json!({ "x": null, "verdict": Verdict::NotApplicable }),
    };
    let ok = thurston["verdict"] != json!(Verdict::Violation);
    let mut report = serde_json::to_value(&result).expect("serializable");
    report["thurston"] = thurston;
    report["schema_version"] = json!(SCHEMA_VERSION);
    report["config"] = json!(cli);
    emit_json(&args.out, &report)?;
    Ok(ok)
}

fn check(cli: &Cli, args: &RunArgs) -> Outcome {
    let loaded = load(args)?;
    let setup = &loaded.setup;
    let grid = grid_of(&args.grid)?;
    let mut scaling = Vec::new();
    for r in [Rational64::from_integer(2), Rational64::from_integer(3), Rational64::new(1, 2)] {
        scaling.push(check_scaling(setup, r, &grid)?);
    }
    let symmetry = check_symmetry(setup, &grid)?;
    let pinching = check_pinching(setup, &grid)?;
    let bounds = bound_fuzz(args.seed, 200, &grid)?;
    let ok = scaling.iter().all(|s| s.pass) && symmetry.pass && pinching.pass && bounds.pass();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cli,
        "pass": ok,
        "scaling": scaling,
        "symmetry": symmetry,
        "pinching": pinching,
        "bounds": { "pass": bounds.pass(), "report": bounds },
    });
    emit_json(&args.out, &report)?;
    Ok(ok)
}

fn tower(cli: &Cli, args: &TowerArgs) -> Outcome {
    if !(args.tol > 0.0) || !(args.gap_tol > 0.0) {
        return Err(usage("tolerances must be positive"));
    }
    let grid = match &args.grid {
        Some(s) => parse_grid(s)?,
        None => vec![0.5, 1.0, 2.0],
    };
    let (a, phi, chain) = match args.demo {
        Demo::Lawton => lawton_demo(args.levels),
    };
    let numeric = NumericOptions { tol: args.tol, max_doublings: 5, ..NumericOptions::default() };
    let report = tower_study(&a, phi, &chain, &grid, numeric)?;
    let max_gap = report.final_gap.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let ok = max_gap < args.gap_tol;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        fs::write(path, buf)?;
    }
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cli,
        "pass": ok,
        "max_final_gap": max_gap,
        "report": report,
    });
    emit_json(&args.out, &value)?;
    Ok(ok)
}
