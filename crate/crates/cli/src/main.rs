//! Command-line pipeline around the toolkit: ensemble simulation,
//! localization statistics, cavity QED analysis, synthesize-and-fit
//! closures, and comparison reports.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::sha256_hex;

#[derive(Parser)]
#[command(
    name = "anderson-qed",
    version,
    about = "Disordered-waveguide transport, localization statistics and cavity QED analysis"
)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration; `paper` pins every default to the reference
    /// experiment.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Override the master seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Simulate the disorder ensemble: transport spectra and resonances.
    Simulate,
    /// Localization statistics over a simulated ensemble.
    Stats,
    /// Purcell, beta-factor, mode-volume and detuning-curve analysis.
    Qed,
    /// Synthesize-and-fit closure across the configured rate grid.
    Fitdemo,
    /// Comparison report against the reference numbers.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // A second initialization in the same process cannot happen here;
        // ignore the error anyway rather than die over a thread-pool knob.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut config = match (&cli.config, cli.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(Preset::Paper)) => ExperimentConfig::reference_experiment(),
        (None, None) => {
            return Err(CliError::Config(
                "pass --config PATH or --preset paper".into(),
            ))
        }
    };
    if let Some(seed) = cli.seed {
        config.disorder.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.directory = out.to_string_lossy().into_owned();
    }
    // Everything validates before any output is produced.
    config.validate()?;
    let config_sha256 = sha256_hex(config.canonical_toml().as_bytes());
    let out_root = PathBuf::from(&config.output.directory);

    match cli.command {
        Command::Simulate => commands::simulate::run(&config, &config_sha256, &out_root),
        Command::Stats => commands::stats::run(&config, &config_sha256, &out_root),
        Command::Qed => commands::qed::run(&config, &config_sha256, &out_root),
        Command::Fitdemo => commands::fitdemo::run(&config, &config_sha256, &out_root),
        Command::Report => commands::report::run(&config, &config_sha256, &out_root),
    }
}
