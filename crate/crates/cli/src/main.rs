//! `pgf`: reads JSON definitions, runs one computation, writes a JSON report.
//!
//! Exit codes: 0 success, 1 mathematical failure, 2 input error,
//! 3 inconclusive or insufficient level.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use pgf_core::descent::{self, TrivializationLevel};
use pgf_core::etale::EtaleModule;
use pgf_core::lattices::{self, Status};
use pgf_core::series::Window;
use pgf_core::{json as pj, Error};

#[derive(Parser, Debug)]
#[command(name = "pgf", version, about = "Finite-precision (phi, Gamma)-module computations")]
struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed echoed in the report for reproducing randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Étale test and consistency identities of a module.
    Check { module: PathBuf },
    /// Classifies a vector against the lattices D^{++} and D^+.
    Lattice {
        module: PathBuf,
        /// A JSON array of entries, inline or as a file path.
        #[arg(long)]
        vector: String,
        /// Iteration cap; defaults to k + r + 8.
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Fixed points of a module at a trivialization level.
    Vee {
        module: PathBuf,
        /// Level file; defaults to degree 1 and the box [0, 1) in every variable.
        #[arg(long)]
        level: Option<PathBuf>,
        /// Number of box doublings allowed on insufficient level.
        #[arg(long, default_value_t = 0)]
        retry_budget: usize,
    },
    /// The module attached to a finite representation.
    Dee {
        rep: PathBuf,
        /// Level file; defaults to the covering degrees and the box [0, 8).
        #[arg(long)]
        level: Option<PathBuf>,
        /// Residue characteristic when the file omits it.
        #[arg(long)]
        p: Option<u64>,
        /// Torsion exponent when the file omits it.
        #[arg(long)]
        h: Option<u32>,
    },
    /// Cohomology dimensions of a finite Koszul complex.
    Koszul { instance: PathBuf },
    /// Restriction of a module to the diagonal.
    Reduce {
        module: PathBuf,
        /// Comma-separated variable order for the φ-product.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
    },
    /// Solves x - φ_α(x) = c for a series c.
    AsSolve {
        series: PathBuf,
        /// Variable name of α.
        #[arg(long)]
        alpha: String,
    },
}

const OK: u8 = 0;
const FAILED: u8 = 1;
const INPUT: u8 = 2;
const UNDECIDED: u8 = 3;

struct Outcome {
    code: u8,
    status: &'static str,
    result: Value,
}

impl Outcome {
    fn new(code: u8, result: Value) -> Outcome {
        let status = match code {
            OK => "ok",
            FAILED => "failed",
            UNDECIDED => "inconclusive",
            _ => "input_error",
        };
        Outcome { code, status, result }
    }
}

/// Failure carrying its exit code.
struct Fail {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        let (code, kind) = match &e {
            Error::Inconclusive(_) | Error::InsufficientLevel { .. } => (UNDECIDED, "inconclusive"),
            Error::NotAUnit(_)
            | Error::NotACocycle(_)
            | Error::DescentDefect(_)
            | Error::NonFreeSolution(_)
            | Error::ObstructionNonzero(_)
            | Error::NonCommutingMaps(_)
            | Error::D2NotZero(_) => (FAILED, "mathematical"),
            _ => (INPUT, "input"),
        };
        Fail { code, kind, message: e.to_string() }
    }
}

fn input_error(message: String) -> Fail {
    Fail { code: INPUT, kind: "input", message }
}

fn read_json(path: &Path) -> Result<Value, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    pj::parse(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Inline JSON when the argument starts like JSON, else a file path.
fn read_inline_or_file(arg: &str) -> Result<Value, Fail> {
    let t = arg.trim_start();
    if t.starts_with('[') || t.starts_with('{') {
        pj::parse(arg).map_err(|e| input_error(format!("--vector: {e}")))
    } else {
        read_json(Path::new(arg))
    }
}

fn read_module(path: &Path) -> Result<EtaleModule, Fail> {
    Ok(pj::module_from_value(&read_json(path)?)?)
}

/// Étale and consistency reports, and whether both pass.
fn validate(m: &EtaleModule) -> Result<(bool, Value), Fail> {
    let et = m.check_etale()?;
    let co = m.check_consistency()?;
    let pass = et.etale && co.consistent;
    let report = json!({
        "etale": et.etale,
        "witnesses": et.witnesses,
        "consistency": co,
    });
    Ok((pass, report))
}

fn var_index(m: &pgf_core::coeffs::Ring, name: &str) -> Result<usize, Fail> {
    Ok(m.var_index(name)?)
}

fn run(cmd: &Command) -> Result<Outcome, Fail> {
    match cmd {
        Command::Check { module } => {
            let m = read_module(module)?;
            let (pass, report) = validate(&m)?;
            Ok(Outcome::new(if pass { OK } else { FAILED }, report))
        }
        Command::Lattice { module, vector, kmax } => {
            let m = read_module(module)?;
            let (pass, report) = validate(&m)?;
            if !pass {
                return Ok(Outcome::new(FAILED, json!({ "invalid_module": report })));
            }
            let v = pj::vector_from_value(&m, &read_inline_or_file(vector)?)?;
            let verdict = lattices::membership(&m, &v, *kmax)?;
            let code = if verdict.status == Status::Inconclusive { UNDECIDED } else { OK };
            Ok(Outcome::new(code, serde_json::to_value(&verdict).expect("verdicts serialize")))
        }
        Command::Vee { module, level, retry_budget } => {
            let m = read_module(module)?;
            let (pass, report) = validate(&m)?;
            if !pass {
                return Ok(Outcome::new(FAILED, json!({ "invalid_module": report })));
            }
            let ring = m.ring();
            let lvl = match level {
                Some(path) => pj::level_from_value(ring, &read_json(path)?)?,
                None => {
                    let n = ring.nvars();
                    TrivializationLevel::new(vec![1; n], Window::uniform(n, 0, 1))?
                }
            };
            let r = descent::vee_with_retry(&m, &lvl, *retry_budget)?;
            Ok(Outcome::new(
                OK,
                json!({
                    "rep": pj::rep_to_value(&r.rep),
                    "level": {
                        "f": r.level.f,
                        "window": pj::window_to_value(ring, &r.level.window),
                    },
                    "attempts": r.attempts,
                    "fixed_basis": r.fixed.basis,
                }),
            ))
        }
        Command::Dee { rep, level, p, h } => {
            let v = pj::rep_from_value(&read_json(rep)?, *p, *h)?;
            let n = v.names.len();
            let lvl = match level {
                Some(path) => {
                    let names: Vec<&str> = v.names.iter().map(String::as_str).collect();
                    let ring =
                        pgf_core::coeffs::Ring::new(pgf_core::coeffs::RingTag::base(v.p, v.h, &names)?)?;
                    pj::level_from_value(&ring, &read_json(path)?)?
                }
                None => TrivializationLevel::covering(&v, Window::uniform(n, 0, 8))?,
            };
            let m = descent::dee_functor(&v, &lvl)?;
            Ok(Outcome::new(OK, json!({ "module": pj::module_to_value(&m), "level_f": lvl.f })))
        }
        Command::Koszul { instance } => {
            let inst = pj::koszul_from_value(&read_json(instance)?)?;
            let report = inst.cohomology_dims();
            let code = if report.euler_ok { OK } else { FAILED };
            Ok(Outcome::new(code, json!({ "cohomology": report, "h0_basis": inst.h0_basis() })))
        }
        Command::Reduce { module, order } => {
            let m = read_module(module)?;
            let reduced = match order {
                Some(names) => {
                    let idx = names.iter().map(|k| var_index(m.ring(), k)).collect::<Result<Vec<_>, _>>()?;
                    m.reduce_diagonal_with_order(&idx)?
                }
                None => m.reduce_diagonal()?,
            };
            Ok(Outcome::new(OK, json!({ "module": pj::module_to_value(&reduced) })))
        }
        Command::AsSolve { series, alpha } => {
            let c = pj::series_from_value(&read_json(series)?)?;
            let a = var_index(c.ring(), alpha)?;
            let sol = descent::as_solve_series(&c, a)?;
            Ok(Outcome::new(
                OK,
                json!({
                    "x": pj::series_to_value(&sol.x),
                    "extension": sol.extension.as_ref().map(|t| serde_json::to_value(t).expect("ring tags serialize")),
                }),
            ))
        }
    }
}

/// The resolved job: command, inputs and every parameter after defaults.
fn job(cmd: &Command, seed: u64) -> Value {
    let path = |p: &PathBuf| json!(p.display().to_string());
    let opt_path = |p: &Option<PathBuf>| p.as_ref().map(path);
    let mut j = match cmd {
        Command::Check { module } => json!({"command": "check", "module": path(module)}),
        Command::Lattice { module, vector, kmax } => {
            json!({"command": "lattice", "module": path(module), "vector": vector, "kmax": kmax})
        }
        Command::Vee { module, level, retry_budget } => json!({
            "command": "vee", "module": path(module), "level": opt_path(level), "retry_budget": retry_budget,
        }),
        Command::Dee { rep, level, p, h } => {
            json!({"command": "dee", "rep": path(rep), "level": opt_path(level), "p": p, "h": h})
        }
        Command::Koszul { instance } => json!({"command": "koszul", "instance": path(instance)}),
        Command::Reduce { module, order } => json!({"command": "reduce", "module": path(module), "order": order}),
        Command::AsSolve { series, alpha } => json!({"command": "as-solve", "series": path(series), "alpha": alpha}),
    };
    j["seed"] = json!(seed);
    j
}

fn main() -> ExitCode {
    pgf_core::par::init_threads_from_env();
    let cli = Cli::parse();
    let mut report = json!({
        "tool": "pgf",
        "version": env!("CARGO_PKG_VERSION"),
        "job": job(&cli.command, cli.seed),
    });
    let code = match run(&cli.command) {
        Ok(o) => {
            report["status"] = json!(o.status);
            report["result"] = o.result;
            o.code
        }
        Err(f) => {
            eprintln!("pgf: {}", f.message);
            report["status"] = json!(if f.code == UNDECIDED { "inconclusive" } else { "error" });
            report["error"] = json!({"kind": f.kind, "message": f.message});
            f.code
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("pgf: {}: {e}", path.display());
                return ExitCode::from(INPUT);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
