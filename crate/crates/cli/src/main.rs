//! `filament`: the automaton pipeline as subcommands.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input-data error,
//! 1 anything else (for example an unwritable output directory).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, Overrides};

#[derive(Debug, Parser)]
#[command(name = "filament", version, about = "Graph automata on atomic filament structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
    /// Worker threads; 0 picks one per core. Results do not depend on it.
    #[arg(long, global = true, env = "FILAMENT_THREADS", default_value_t = 0)]
    threads: usize,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrajectoryFormat {
    None,
    Csv,
    Binary,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the structure, infer bonds and print a summary.
    Ingest {
        /// Also write nodes.csv and edges.csv.
        #[arg(long)]
        dump: bool,
    },
    /// Hard and soft degree histograms.
    Stats,
    /// I/O domain membership.
    Domains,
    /// Run one trial of one input and record its dynamics.
    Simulate {
        /// Input string I_0..I_{m-1}, e.g. 01011111.
        #[arg(long)]
        bits: String,
        /// Trial number within the input's seed stream (as in `sweep`).
        #[arg(long, default_value_t = 1)]
        trial: u64,
        #[arg(long, value_enum, default_value_t = TrajectoryFormat::None)]
        trajectory: TrajectoryFormat,
        /// Bin width in Å of the activity profile along x.
        #[arg(long, default_value_t = 1.0)]
        bin_width: f64,
    },
    /// All input strings: writes W.csv, W.json, epsilon.csv and W.pgm.
    Sweep {
        /// γ values for epsilon.csv (default 0, 0.05, ..., 1).
        #[arg(long, value_delimiter = ',')]
        gamma_list: Vec<f64>,
        /// Path of W.csv; the other files go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pixel size of one W entry in the PGM image.
        #[arg(long, default_value_t = 4)]
        pgm_cell: usize,
    },
    /// Threshold W and minimize every output.
    Mine {
        /// W.csv or W.json from `sweep`; runs a sweep when absent.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.15,0.2,0.22,0.23,0.24,0.25")]
        gammas: Vec<f64>,
        /// Path of functions.json; a text report goes next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the sweep for several lower birth thresholds.
    ThetaSweep {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.125,0.15,0.175,0.2,0.225,0.25")]
        thetas: Vec<f64>,
        /// Reliability threshold for the ones ratio and ε.
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<actin_automata::Error>() {
        Some(e) if e.is_config() => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let threads = cli.threads;
    let result = actin_automata::experiment::with_threads(threads, || commands::run(cli.command, &cli.overrides))
        .map_err(anyhow::Error::from)
        .and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
