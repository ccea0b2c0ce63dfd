use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adaptive_engine::cli::{self, Grid, RunConfig};
use adaptive_engine::Result;

#[derive(Parser)]
#[command(
    name = "adaptive-engine",
    version,
    about = "Three-level maser engine driven by a Brownian controller"
)]
struct Args {
    /// TOML configuration; the built-in reference configuration when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state at the configured controller position.
    Steady,
    /// Power landscape over controller positions.
    Landscape {
        /// Position grid MIN:MAX:N in nm.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid>,
    },
    /// Feedback loop over a drifting temperature schedule.
    Adapt {
        /// CSV with columns time,t13,t23 (K).
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Operability over a grid of bath temperatures.
    Sweep {
        /// Temperature grid MIN:MAX:N in K, used for both baths.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid>,
    },
    /// Truncated joint engine/controller simulation.
    Joint {
        /// Position grid MIN:MAX:N in nm for the marginals.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid>,
    },
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    Grid::parse(s).map_err(|e| e.to_string())
}

fn run(args: Args) -> Result<Vec<PathBuf>> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default_config(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    match args.command {
        Command::Steady => cli::cmd_steady(&cfg, &out),
        Command::Landscape { grid } => cli::cmd_landscape(&cfg, &out, grid),
        Command::Adapt { schedule } => cli::cmd_adapt(&cfg, &out, schedule.as_deref()),
        Command::Sweep { grid } => cli::cmd_sweep(&cfg, &out, grid),
        Command::Joint { grid } => cli::cmd_joint(&cfg, &out, grid),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
