//! `contention`: experiment runner for the contention-resolution simulator.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "contention", version, about = "Seeded contention-resolution experiments")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for trial farms; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run seeded trials and write pooled latency statistics.
    Sim,
    /// Run an experiment for each n and write one CSV row per n.
    Sweep,
    /// Monte-Carlo counter games against their theoretical bound.
    CounterGame,
    /// Dump Elias code and synchronization tables.
    Elias {
        #[arg(long, default_value_t = 64)]
        max_n: u64,
        #[arg(long, default_value_t = 64)]
        max_t: u64,
    },
    /// Recompute contention, blocks and goodness from a saved trace.
    Analyze,
}

fn require_config(cli: &Cli) -> Result<&PathBuf, CliError> {
    cli.config
        .as_ref()
        .ok_or_else(|| CliError::Config("this subcommand needs --config PATH".into()))
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Runtime(format!("{}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Sim => {
            let mut c: config::ExperimentConfig = config::load(require_config(cli)?)?;
            if let Some(seed) = cli.seed {
                c.seed = seed;
            }
            commands::sim(&c, &cli.out)
        }
        Command::Sweep => {
            let mut c: config::SweepConfig = config::load(require_config(cli)?)?;
            if let Some(seed) = cli.seed {
                c.base.seed = seed;
            }
            commands::sweep(&c, &cli.out)
        }
        Command::CounterGame => {
            let mut c: config::CounterGameFile = config::load(require_config(cli)?)?;
            if let Some(seed) = cli.seed {
                c.seed = seed;
            }
            commands::counter_game(&c, &cli.out)
        }
        Command::Elias { max_n, max_t } => commands::elias(*max_n, *max_t, &cli.out),
        Command::Analyze => {
            let c: config::AnalyzeConfig = config::load(require_config(cli)?)?;
            commands::analyze(&c, &cli.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("contention: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
