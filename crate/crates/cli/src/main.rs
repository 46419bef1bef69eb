//! `jwit`: evaluate j, check the predicates of a problem file, search for
//! witnesses.
//!
//! Exit codes: 0 success, 1 predicate failure, 2 parse or schema error,
//! 3 precision unreachable, 4 search exhausted.

use clap::{Args, Parser, Subcommand};
use jwit_core::modular::{j_derivatives, j_eval, EvalResult};
use jwit_core::problem::{
    height_csv, residual_csv, run_check, run_witness, ProblemFile, Status, WitnessReport,
};
use jwit_core::{Error, HPoint};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "jwit", version, about = "Witnesses for j, j′ and exp on free broad pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate j (and j′, j″) at a point of the upper half plane.
    Eval {
        /// Real and imaginary part of z.
        #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_negative_numbers = true)]
        z: Vec<f64>,
        /// Requested relative precision.
        #[arg(long, default_value_t = 1e-10)]
        prec: f64,
        /// Also print j′ and j″.
        #[arg(long)]
        derivs: bool,
    },
    /// Run the structural predicates of a problem.
    Check(RunArgs),
    /// Run the predicates, then the witness search for the problem's mode.
    Witness {
        #[command(flatten)]
        run: RunArgs,
        /// Search even if a predicate fails.
        #[arg(long)]
        force: bool,
        /// Also write the height and residual traces as CSV next to --out.
        #[arg(long)]
        scan: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Problem file (JSON).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Report file; printed to stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Overrides the seed of the problem file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the coset search.
    #[arg(long)]
    threads: Option<usize>,
}

/// Fixed 17-significant-digit scientific notation.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn print_value(name: &str, r: &EvalResult) {
    println!(
        "{name} {} {} err {}",
        fmt17(r.value.re),
        fmt17(r.value.im),
        fmt17(r.error_bound)
    );
}

fn eval(z: &[f64], prec: f64, derivs: bool) -> Result<(), Error> {
    let z = HPoint::new(z[0], z[1])?;
    if derivs {
        let (j, dj, d2j) = j_derivatives(z, prec)?;
        print_value("j", &j);
        print_value("j'", &dj);
        print_value("j''", &d2j);
    } else {
        print_value("j", &j_eval(z, prec)?);
    }
    Ok(())
}

fn eval_exit(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    let code = match e {
        Error::PrecisionUnreachable { .. } => Status::PrecisionUnreachable,
        _ => Status::ParseError,
    };
    ExitCode::from(code.code() as u8)
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn run(args: &RunArgs, witness: Option<(bool, bool)>) -> Result<Status, String> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let text = fs::read_to_string(&args.input)
        .map_err(|e| format!("cannot read {}: {e}", args.input.display()))?;
    let mut problem = match ProblemFile::from_json(&text).and_then(|p| p.parse()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(Status::ParseError);
        }
    };
    if let Some(seed) = args.seed {
        problem.config_mut().seed = seed;
    }
    let report: WitnessReport = match witness {
        None => run_check(&problem),
        Some((force, _)) => run_witness(&problem, force),
    };
    let json = report.to_json();
    match &args.out {
        Some(path) => write(path, &json)?,
        None => print!("{json}"),
    }
    if let (Some((_, true)), Some(wit)) = (witness, &report.witness) {
        let out = args
            .out
            .as_deref()
            .ok_or("--scan needs --out to place the CSV files")?;
        write(&sibling(out, ".heights.csv"), &height_csv(wit))?;
        write(&sibling(out, ".residuals.csv"), &residual_csv(wit))?;
    }
    if let Some(m) = &report.message {
        eprintln!("{m}");
    }
    Ok(report.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Eval { z, prec, derivs } => match eval(&z, prec, derivs) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => eval_exit(&e),
        },
        Command::Check(args) => finish(run(&args, None)),
        Command::Witness { run: args, force, scan } => finish(run(&args, Some((force, scan)))),
    }
}

fn finish(r: Result<Status, String>) -> ExitCode {
    match r {
        Ok(s) => ExitCode::from(s.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::ParseError.code() as u8)
        }
    }
}
