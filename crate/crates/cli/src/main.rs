//! `nonclassical` command-line front end.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{ExpsimPreset, ScanName};
use crate::error::CliError;
use crate::output::{Format, Sink};

#[derive(Parser, Debug)]
#[command(name = "nonclassical", version, about = "Phase-space parity tests of nonclassicality and non-Gaussianity")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON config for the subcommand; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory. Without it results go to stdout and the manifest to stderr.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Scaled Wigner function on a grid or at listed points.
    Wigner {
        #[arg(long, value_name = "PATH")]
        state: PathBuf,
        /// CSV with columns `x,y`; overrides the grid.
        #[arg(long, value_name = "PATH")]
        points: Option<PathBuf>,
        /// Frame angle for the point coordinates.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Evaluate J or J' for a state and a point set.
    Test {
        #[arg(long, value_name = "PATH")]
        state: PathBuf,
        #[arg(long, value_name = "PATH")]
        points: PathBuf,
    },
    /// Optimize the test over point sets for one state.
    Optimize {
        #[arg(long, value_name = "PATH")]
        state: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<commands::ModeArg>,
        #[arg(long, value_enum)]
        objective: Option<commands::ObjectiveArg>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        multistart: Option<usize>,
    },
    /// Threshold and parameter scans over state families.
    Scan {
        #[arg(value_enum)]
        name: ScanName,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        r_max: Option<f64>,
        /// Also write a gnuplot script (needs --out and csv format).
        #[arg(long)]
        gnuplot: bool,
    },
    /// Leading eigenstate of the truncated lattice problem.
    Eigenmax {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, conflicts_with = "r_index")]
        d_squared: Option<f64>,
        /// Use d² = Rπ/2 + π/4.
        #[arg(long)]
        r_index: Option<u32>,
    },
    /// Simulated sideband measurement and fit, or a fit of recorded data.
    Expsim {
        #[arg(value_enum)]
        preset: Option<ExpsimPreset>,
        /// Vacuum weight for the mixture preset.
        #[arg(long)]
        weight: Option<f64>,
        /// Fit a recorded series (`t_us,p_up,shots`) instead of simulating.
        #[arg(long, value_name = "PATH")]
        series: Option<PathBuf>,
    },
    /// Purity thresholds for detecting squeezed thermal states.
    Thresholds {
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let sink = Sink::new(cli.global.out.clone(), cli.global.format)?;
    commands::dispatch(&cli.global, cli.command, sink)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
