//! `hsasim`: synth, estimate, simulate and report as separate steps, each
//! leaving its artifacts and a manifest on disk.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "hsasim", version, about = "Markov expense models and HSA Monte Carlo studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic person-year dataset.
    Synth {
        /// Calibration JSON; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate transition matrices and persistence reports.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo study.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Study parameters JSON; missing fields take defaults.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build report tables and plot feeds from a study.
    Report {
        #[arg(long)]
        study: PathBuf,
        /// Optional dataset for the cohort descriptive tables.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { config, out } => commands::synth(config.as_deref(), &out),
        Command::Estimate { data, out } => commands::estimate(&data, &out),
        Command::Simulate { model, data, config, preset, threads, out } => {
            commands::simulate(commands::SimulateArgs {
                model: &model,
                data: &data,
                config: config.as_deref(),
                paper: matches!(preset, Some(Preset::Paper)),
                threads,
                out: &out,
            })
        }
        Command::Report { study, data, out } => commands::report(&study, data.as_deref(), &out),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
