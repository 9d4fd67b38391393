use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use byzest_cli::commands::{self, CliError, Figure1Args};
use byzest_cli::config::keys_help;
use byzest_cli::figure1;

/// Byzantine-resilient cooperative estimation: simulate, analyse, check graphs.
#[derive(Parser)]
#[command(name = "byzest", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trace CSV.
    #[command(after_long_help = keys_help())]
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print rates, bounds and assumption verdicts for a config.
    #[command(after_long_help = keys_help())]
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Consensus achievability, connectivity and source-component census.
    CheckTopology {
        /// Edge-list file: `n <count>` or `complete <count>`, then `src dst` lines.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        b: usize,
    },
    /// Canned |A| = 4..10 sweep: per-|A| CSVs, an aggregate .dat and a gnuplot script.
    Figure1 {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = figure1::DEFAULT_ROUNDS)]
        rounds: u64,
        /// Noise norm bound C; 0 runs noiseless.
        #[arg(long, default_value_t = 0.05)]
        noise_bound: f64,
        #[arg(long)]
        jobs: Option<usize>,
        /// Overwrite a non-empty output directory.
        #[arg(long)]
        force: bool,
    },
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate { config, seed, out, jobs } => commands::simulate(&config, seed, out, jobs),
        Command::Analyze { config } => commands::analyze(&config),
        Command::CheckTopology { graph, b } => commands::check_topology(&graph, b),
        Command::Figure1 { out, seeds, rounds, noise_bound, jobs, force } => {
            commands::figure1(&Figure1Args { out, seeds, rounds, noise_bound, force, jobs })
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
