//! `pauli-lens`: low-degree certificates, hardness reports and parity
//! boosting plans for constant-depth quantum circuits.

mod commands;
mod dto;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{approx, boost, degree, expand, hardness, verify, Context};
use crate::error::CliResult;
use crate::io::Sink;

#[derive(Parser, Debug)]
#[command(name = "pauli-lens", version, about = "Pauli-spectrum analysis of constant-depth quantum circuits")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Write the JSON report here (and the CSV table next to it).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Explicit CSV path for the numeric table.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Seed for every random choice; echoed in reports.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps. Defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Qubit cap for dense routes.
    #[arg(long, global = true, env = "PAULI_LENS_DENSE_LIMIT")]
    dense_limit: Option<usize>,
    /// Suppress the human-readable summary on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pauli expansion of a circuit unitary, matrix, state or Boolean function.
    Expand(expand::ExpandArgs),
    /// Low-degree approximation certificate.
    Approx(approx::ApproxArgs),
    /// Approximate degree of a Boolean function.
    Degree(degree::DegreeArgs),
    /// Hardness reports comparing exact degrees with circuit ledgers.
    Hardness(hardness::HardnessArgs),
    /// Parity boosting plans.
    Boost(boost::BoostArgs),
    /// Re-check a certificate against the exact object.
    Verify(verify::VerifyArgs),
}

fn run(cli: Cli) -> CliResult<Option<String>> {
    if let Some(limit) = cli.global.dense_limit {
        pauli_lens_core::set_dense_limit(limit);
    }
    let ctx = Context::new(cli.global.seed, cli.global.workers)?;
    let report = match cli.command {
        Command::Expand(a) => expand::run(&ctx, a)?,
        Command::Approx(a) => approx::run(&ctx, a)?,
        Command::Degree(a) => degree::run(&ctx, a)?,
        Command::Hardness(a) => hardness::run(&ctx, a)?,
        Command::Boost(a) => boost::run(&ctx, a)?,
        Command::Verify(a) => verify::run(&ctx, a)?,
    };
    let sink = Sink { out: cli.global.out, csv: cli.global.csv, quiet: cli.global.quiet };
    sink.emit(&report)?;
    Ok(report.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(why)) => {
            eprintln!("check failed: {why}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
