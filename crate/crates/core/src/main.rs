//! `stochosc` CLI: reproducible oscillator experiments from a JSON config.
//!
//! Exit codes: 0 success/pass, 1 acceptance-threshold failure, 2 config or
//! execution error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stochosc::config::ExperimentConfig;
use stochosc::experiment::{
    run_compare_integrators, run_sign_changes, run_simulate, run_verify_lil, Outcome,
};

#[derive(Parser)]
#[command(name = "stochosc", version, about = "Coupled stochastic oscillator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's number of paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory (default: config output_dir, else "out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the path fan-out (default: all cores). Results are
    /// byte-identical for any thread count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write one trajectory CSV per path.
    Simulate(CommonArgs),
    /// Per-seed iterated-logarithm envelope statistics and the aggregate
    /// two-sided passage rate.
    VerifyLil(CommonArgs),
    /// Strong-error convergence table for the LL and EM schemes.
    CompareIntegrators(CommonArgs),
    /// Per-component sign-change counts and the simple-zero fraction table.
    SignChanges(CommonArgs),
}

fn load(args: &CommonArgs) -> Result<(ExperimentConfig, PathBuf), stochosc::CoreError> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(paths) = args.paths {
        config.paths = paths;
    }
    config.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn run(
    args: &CommonArgs,
    f: impl FnOnce(&ExperimentConfig, &std::path::Path) -> stochosc::Result<Outcome> + Send,
) -> ExitCode {
    let (config, out) = match load(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| f(&config, &out)) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(args) => run(args, run_simulate),
        Command::VerifyLil(args) => run(args, run_verify_lil),
        Command::CompareIntegrators(args) => run(args, run_compare_integrators),
        Command::SignChanges(args) => run(args, run_sign_changes),
    }
}
