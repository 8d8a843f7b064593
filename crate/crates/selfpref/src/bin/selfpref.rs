//! Thin CLI over the selfpref library: `judge`, `verify`, `metrics`,
//! `analyze`, and `simulate`, each driven by one config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use selfpref::commands::{
    cmd_analyze, cmd_judge, cmd_metrics, cmd_simulate, cmd_verify, exit_code, CliOverrides,
};
use selfpref::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "selfpref",
    about = "Measure self-preference bias of LLM judges",
    version
)]
struct Cli {
    /// Path to the run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's paths.out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Exclude timestamps from logs and reports so identical runs produce
    /// identical bytes.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Seed override for `simulate`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// For `judge`: render prompts only, no network access.
    #[arg(long, global = true)]
    dry_run: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or dry-run) the configured judging plan against the endpoint.
    Judge,
    /// Build the programmatic-verifier reference for a verifiable dataset.
    Verify,
    /// Compute accuracy, overestimation, and HSPP reports from logs.
    Metrics,
    /// Committee, agreement-sweep, delta-matrix, and slice analyses.
    Analyze,
    /// Generate a synthetic corpus and check estimator recovery.
    Simulate,
}

fn run(cli: Cli) -> selfpref::Result<()> {
    let config_path = cli.config.ok_or_else(|| {
        selfpref::Error::Config("--config <file> is required".into())
    })?;
    let (config, config_hash) = RunConfig::load(&config_path)?;
    let overrides = CliOverrides {
        out: cli.out,
        seed: cli.seed,
        deterministic: cli.deterministic,
        dry_run: cli.dry_run,
    };
    match cli.command {
        Command::Judge => {
            cmd_judge(&config, &config_hash, &overrides)?;
        }
        Command::Verify => {
            cmd_verify(&config, &config_hash, &overrides)?;
        }
        Command::Metrics => {
            cmd_metrics(&config, &config_hash, &overrides)?;
        }
        Command::Analyze => {
            cmd_analyze(&config, &config_hash, &overrides)?;
        }
        Command::Simulate => {
            cmd_simulate(&config, &config_hash, &overrides)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors exit 1 per the contract; --help/--version exit 0.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
