use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod svg;

/// Simulate collective motion, fragment trajectories, and reconstruct them
/// with a masked autoencoder or low-rank matrix completion.
#[derive(Debug, Parser)]
#[command(name = "trajrec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a swarm and write its trajectories.
    Simulate {
        #[command(flatten)]
        settings: Settings,
        /// Output CSV [default: <output-dir>/trajectories.csv]
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Delete a percentage of agent-timestep cells from a trajectory file.
    Fragment {
        #[command(flatten)]
        settings: Settings,
        /// Fully observed trajectory CSV.
        #[arg(short, long)]
        input: PathBuf,
        /// Percentage of cells to delete.
        #[arg(short, long)]
        percent: f64,
        /// Output CSV [default: <output-dir>/fragmented.csv]
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the indicator mask as `agent,t,observed`.
        #[arg(long)]
        mask_output: Option<PathBuf>,
    },
    /// Singular-value rank report of a trajectory file.
    Rank {
        #[command(flatten)]
        settings: Settings,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FlavorArg::Linear)]
        flavor: FlavorArg,
        /// Output CSV [default: <output-dir>/rank_<flavor>.csv]; the SVG goes next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fill in the missing cells of a fragmented trajectory file.
    Reconstruct {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Trajectory CSV; cells with empty x,y are treated as missing.
        #[arg(short, long)]
        input: PathBuf,
        /// Fragmentation level used to derive the training seed from the master seed.
        #[arg(long, default_value_t = 0.0)]
        level: f64,
        /// Output CSV [default: <output-dir>/<method>_reconstruction.csv]
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// RMSE between a reconstruction and the ground truth.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        reconstructed: PathBuf,
        /// Fragmented CSV whose empty cells select entries for `missing-only`.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Metric; all applicable metrics are printed when omitted.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Full sweep: simulate, rank, then fragment and reconstruct at every level.
    Run {
        #[command(flatten)]
        settings: Settings,
    },
}

/// Experiment settings shared by most subcommands. Command-line values
/// override the configuration file, which overrides the defaults.
#[derive(Debug, Args, Default)]
struct Settings {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Ground-truth CSV for the `file` scenario.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Agent count.
    #[arg(long)]
    agents: Option<usize>,
    /// Time-step count.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    speed: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Noise amplitude.
    #[arg(long)]
    noise: Option<f64>,
    /// Seed of the simulated initial state and noise.
    #[arg(long)]
    sim_seed: Option<u64>,
    /// Comma-separated fragmentation percentages.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    hda_tolerance: Option<f64>,
    #[arg(long)]
    lmc_iters: Option<usize>,
    #[arg(long)]
    lmc_tolerance: Option<f64>,
    /// Neighbours per configuration in the geodesic graph.
    #[arg(long)]
    alpha: Option<usize>,
    /// Prominence threshold in percent.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Spiral,
    Obstacle,
    Classic,
    File,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlavorArg {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Hda,
    Lmc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    All,
    MissingOnly,
    PerStep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
