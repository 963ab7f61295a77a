//! Command-line front end for the sweep experiments. Each subcommand reads
//! one INI config, runs its suite, and writes one CSV (to `--out`, else the
//! config's `[output] path`, else stdout).
//!
//! Exit codes: 0 all checks passed, 1 a bound or identity was violated (the
//! first bad row goes to stderr), 2 configuration problem, 3 numerical
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bosemix_core::config::ExperimentConfig;
use bosemix_core::error::{Error, Result};
use bosemix_core::experiments::{
    run_corr_sweep, run_decomposition_check, run_hartree_compare, run_lr_sweep, SweepOutput,
};

#[derive(Parser)]
#[command(
    name = "bosemix",
    version,
    about = "Desk-scale laboratory for two-component Bose-mixture dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the commutator envelope over times, cells and witnesses
    LrSweep(RunArgs),
    /// Sweep the correlation-growth envelope over times, cells and witnesses
    CorrSweep(RunArgs),
    /// Check the exact projector decomposition of correlations
    DecompCheck(RunArgs),
    /// Compare many-body reduced density matrices against Hartree orbitals
    HartreeCompare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (INI sections: system, potentials, layout, run, output)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; defaults to the config's [output] path, then stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core); never affects output bytes
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let (args, runner): (&RunArgs, fn(&ExperimentConfig) -> Result<SweepOutput>) =
        match &cli.command {
            Command::LrSweep(a) => (a, run_lr_sweep),
            Command::CorrSweep(a) => (a, run_corr_sweep),
            Command::DecompCheck(a) => (a, run_decomposition_check),
            Command::HartreeCompare(a) => (a, run_hartree_compare),
        };

    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    cfg.override_seed(args.seed);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    let output = pool.install(|| runner(&cfg))?;

    match args.out.clone().or_else(|| cfg.output.path.clone().map(PathBuf::from)) {
        Some(path) => std::fs::write(&path, &output.csv)?,
        None => print!("{}", output.csv),
    }

    if let Some(row) = output.violation {
        eprintln!("violation: {row}");
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
