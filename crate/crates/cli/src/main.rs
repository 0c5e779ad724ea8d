//! `subwave`: band structures, mid-gap frequencies, dislocation sweeps and
//! disorder statistics of dimer resonator chains, driven by JSON configs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Run, DEFAULT_GRID, DEFAULT_SEED};
use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] subwave::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use subwave::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Lib(e) => match e {
                E::InvalidParameter { .. } | E::Overlap { .. } => 2,
                E::NonConvergence { .. } | E::BranchAmbiguity { .. } | E::Singular { .. } => 4,
                E::Io(_) => 1,
                _ => 3,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "subwave",
    version,
    about = "Spectra of dislocated subwavelength resonator chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Brillouin-zone grid size for `bands`.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Band structure over the Brillouin zone.
    Bands,
    /// Band gap edges.
    Gap,
    /// Mid-gap frequencies of the infinite dislocated chain.
    Midgap {
        /// Also write the attainable interval and the limit frequency.
        #[arg(long)]
        interval: bool,
    },
    /// Finite-array spectra over a range of dislocations.
    Sweep,
    /// Frequency statistics under random positional disorder.
    Stability,
    /// Mid-gap modes and their field along the chain axis.
    Modes,
    /// Sign and monotonicity checks behind the mid-gap analysis.
    Diagnostics,
}

fn setup(cli: &Cli) -> Result<Run, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    let threads = cli.threads.or(cfg.raw.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let grid = cli.grid.or(cfg.raw.grid).unwrap_or(DEFAULT_GRID);
    if grid < 2 {
        return Err(CliError::Config("--grid must be at least 2".into()));
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.raw.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    Ok(Run {
        seed: cli.seed.or(cfg.raw.seed).unwrap_or(DEFAULT_SEED),
        cfg,
        out,
        grid,
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let run = setup(cli)?;
    match cli.command {
        Command::Bands => commands::bands(&run),
        Command::Gap => commands::gap(&run),
        Command::Midgap { interval } => commands::midgap(&run, interval),
        Command::Sweep => commands::sweep(&run),
        Command::Stability => commands::stability(&run),
        Command::Modes => commands::modes(&run),
        Command::Diagnostics => commands::diagnostics(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
