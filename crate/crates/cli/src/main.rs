//! `coopbf`: generate instances, solve them, check certificates, and run
//! the Monte-Carlo rate sweep.
//!
//! Exit codes: `solve` returns 0 when solved, 2 when infeasible and 3 on a
//! numerical failure; `certify` returns 0 when every condition passes and 1
//! otherwise. Bad arguments exit with 64, unreadable or malformed input
//! files with 65, and failed writes with 74.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use coopbf::harness::sweep::{to_csv, to_json, SweepConfig};
use coopbf::harness::trace::JsonLinesTrace;
use coopbf::harness::{gen_instance, run_sweep};
use coopbf::io;
use coopbf::solver::solve_traced;
use coopbf::{certify, model, CertifyTolerances, SolverConfig, SolverError};

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "coopbf", version, about = "Joint beamforming and fronthaul compression solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance with i.i.d. CN(0, 1) channels.
    Gen {
        #[arg(long = "M")]
        relays: usize,
        #[arg(long = "K")]
        users: usize,
        /// Fronthaul capacity of every relay, bits per symbol.
        #[arg(long)]
        capacity: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// Rate target of every user, bits per symbol.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance and write the primal and dual solutions.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the dual multipliers [default: <out>.dual.json]
        #[arg(long)]
        dual_out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Write one JSON line per iteration to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate the optimality conditions of a solution and print the certificate.
    Certify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        dual: PathBuf,
    },
    /// Run the Monte-Carlo sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_json: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Io(m) => m,
        }
    }
}

/// Prints a line to stdout, ignoring a closed pipe.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn data_err(path: &Path) -> impl Fn(coopbf::ModelError) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

fn default_dual_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.dual.json"))
}

fn gen(relays: usize, users: usize, capacity: f64, sigma2: f64, rate: f64, seed: u64, out: &Path) -> Result<u8, Failure> {
    if relays == 0 || users == 0 {
        return Err(Failure::Usage("--M and --K must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = gen_instance(relays, users, capacity, sigma2, rate, &mut rng)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    write(out, &io::serialize_instance_with_rates(&inst, &vec![rate; users]))?;
    Ok(0)
}

fn solve_cmd(
    input: &Path,
    out: &Path,
    dual_out: Option<PathBuf>,
    tol: Option<f64>,
    max_iters: Option<usize>,
    trace: Option<PathBuf>,
) -> Result<u8, Failure> {
    let inst = io::parse_instance(&read(input)?).map_err(data_err(input))?;
    let mut cfg = SolverConfig::default();
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Failure::Usage("--tol must be positive".into()));
        }
        cfg.tol = t;
    }
    if let Some(n) = max_iters {
        cfg.max_iters = n;
    }

    let mut tracer = match &trace {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            Some(JsonLinesTrace::new(BufWriter::new(file)))
        }
        None => None,
    };
    let result = solve_traced(&inst, &cfg, &mut |phase, step| {
        if let Some(t) = tracer.as_mut() {
            t.record(phase, step);
        }
    });
    if let (Some(t), Some(path)) = (tracer, &trace) {
        t.finish().map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }

    match result {
        Ok(sol) => {
            write(out, &io::serialize_solution(&sol.primal))?;
            write(&dual_out.unwrap_or_else(|| default_dual_path(out)), &io::serialize_dual(&sol.dual))?;
            let summary = json!({
                "status": "solved",
                "objective": model::objective(&sol.primal),
                "dual_objective": sol.dual.objective(&inst),
                "dual_iterations": sol.dual_iterations,
                "primal_iterations": sol.primal_iterations,
            });
            emit(&summary.to_string());
            Ok(0)
        }
        Err(e @ SolverError::Infeasible { .. }) => {
            emit(&json!({ "status": "infeasible", "message": e.to_string() }).to_string());
            Ok(2)
        }
        Err(SolverError::Model(e)) => Err(data_err(input)(e)),
        Err(e) => {
            emit(&json!({ "status": "failed", "message": e.to_string() }).to_string());
            Ok(3)
        }
    }
}

fn certify_cmd(instance: &Path, solution: &Path, dual: &Path) -> Result<u8, Failure> {
    let inst = io::parse_instance(&read(instance)?).map_err(data_err(instance))?;
    let primal = io::parse_solution(&read(solution)?).map_err(data_err(solution))?;
    let dual = io::parse_dual(&read(dual)?).map_err(data_err(dual))?;
    let cert = certify(&inst, &primal, &dual, &CertifyTolerances::default()).map_err(|e| Failure::Data(e.to_string()))?;
    emit(&cert.to_json());
    Ok(if cert.pass { 0 } else { 1 })
}

fn sweep_cmd(config: &Path, out_csv: &Path, out_json: &Path) -> Result<u8, Failure> {
    let bytes = read(config)?;
    let cfg: SweepConfig =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Data(format!("{}: {e}", config.display())))?;
    let report = run_sweep(&cfg).map_err(|e| Failure::Data(format!("{}: {e}", config.display())))?;
    write(out_csv, to_csv(&report.runs).as_bytes())?;
    write(out_json, to_json(&report).as_bytes())?;
    for s in &report.summary {
        eprintln!(
            "rate {}: mean power {}, solved {}, infeasible {}, failed {}",
            s.rate_target,
            s.mean_objective.map(|m| m.to_string()).unwrap_or_else(|| "n/a".into()),
            s.solved,
            s.infeasible,
            s.failed
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen { relays, users, capacity, sigma2, rate, seed, out } => {
            gen(relays, users, capacity, sigma2, rate, seed, &out)
        }
        Command::Solve { input, out, dual_out, tol, max_iters, trace } => {
            solve_cmd(&input, &out, dual_out, tol, max_iters, trace)
        }
        Command::Certify { instance, solution, dual } => certify_cmd(&instance, &solution, &dual),
        Command::Sweep { config, out_csv, out_json } => sweep_cmd(&config, &out_csv, &out_json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("coopbf: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
