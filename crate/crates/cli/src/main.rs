//! `corrdet`: batch front end for designing and evaluating mismatched
//! correlation detectors.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corrdet_core::Error as CoreError;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "corrdet", version, about = "Error exponents and optimal design of correlation detectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; `.json` selects JSON, anything else CSV. Defaults to CSV on stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for simulations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// CGF and its derivative over a grid of arguments.
    Cgf,
    /// FA exponent over a threshold grid.
    Fa,
    /// MD exponent of a given joint weight/signal distribution.
    Md,
    /// Optimal, classical and binary correlators for a signal.
    Design,
    /// k-level correlator.
    Quantize,
    /// Joint signal/correlator design.
    Joint,
    /// Stationary levels and the curves that define them.
    Roots,
    /// Correlation+energy or correlation+|.| detectors.
    Extended,
    /// Importance-sampled MD probabilities and slope fit.
    Simulate,
    /// Data behind the published figures (1-4).
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        id: u8,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::DegenerateSignal
            | CoreError::Domain { .. }
            | CoreError::DegenerateTilt(_) => CliError::Config(msg),
            CoreError::Io(_) | CoreError::Csv(_) => CliError::Io(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Err(CliError::Config("--config <path> is required for this subcommand".into())),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = || load(cli.config.as_deref());
    let out = match &cli.command {
        Command::Cgf => commands::cgf(&cfg()?),
        Command::Fa => commands::fa(&cfg()?),
        Command::Md => commands::md(&cfg()?),
        Command::Design => commands::design(&cfg()?),
        Command::Quantize => commands::quantize(&cfg()?),
        Command::Joint => commands::joint(&cfg()?),
        Command::Roots => commands::roots(&cfg()?),
        Command::Extended => commands::extended(&cfg()?),
        Command::Simulate => commands::simulate(&cfg()?, cli.seed),
        Command::Figure { id } => commands::figure(*id),
    }?;
    output::emit(&out, cli.out.as_deref()).map_err(|e| CliError::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corrdet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
