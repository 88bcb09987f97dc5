//! `cnts`: train, evaluate and compare cooperative anomaly detectors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cnts_core::{CntsError, ErrorClass, TrainMode};

mod commands;
mod config;
mod run;

use config::Overrides;

#[derive(Parser)]
#[command(
    name = "cnts",
    version,
    about = "Cooperative reconstructor/detector anomaly detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one mode into `<runs>/<run id>`.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<TrainMode>,
        /// Run root; overrides CNTS_RUNS_DIR and the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score labeled series with a finished run.
    Eval {
        run: PathBuf,
        /// Labeled series CSVs; defaults to the run's configured test set.
        #[arg(long = "test")]
        tests: Vec<PathBuf>,
        /// Report path; defaults to `<run>/reports/report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated train/test pair.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Benchmark parameters as JSON; defaults to the built-in benchmark.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train all three modes on the same data and compare them.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise finished runs.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<TrainMode, String> {
    s.parse().map_err(|e: CntsError| e.to_string())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CntsError>() {
            return match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Numeric => 3,
                ErrorClass::Io => 4,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            return if e.is_io() { 4 } else { 2 };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            mode,
            out,
        } => {
            commands::train_cmd(&config, &Overrides { seed, mode, out })?;
        }
        Command::Eval { run, tests, out } => {
            commands::eval_cmd(&run, &tests, out.as_deref())?;
        }
        Command::Synth { out, seed, config } => {
            commands::synth_cmd(&out, seed, config.as_deref())?;
        }
        Command::Ablate { config, seed, out } => {
            commands::ablate_cmd(
                &config,
                &Overrides {
                    seed,
                    mode: None,
                    out,
                },
            )?;
        }
        Command::Report { runs, out } => {
            commands::report_cmd(&runs, out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", run::describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
