use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrproj_cli::commands::{self, EvolveArgs, TwoBandArgs, TwoBandMode};
use corrproj_cli::config::Method;

/// Correlated projections and generalized Lindblad dynamics.
///
/// Exit status: 0 pass, 1 quantitative failure, 2 usage or configuration error.
/// CORRPROJ_SIZE_CAP overrides the size guard of the dense propagators.
#[derive(Parser)]
#[command(name = "corrproj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Grid {
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the conditions of a projection config.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Replace the built-in tolerances by a single one.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Propagate initial components under a generator and write a trajectory.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Two-band model: exact ensemble, effective equations, or their comparison.
    Twoband {
        #[arg(value_enum)]
        mode: TwoBandMode,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Maximum accepted deviation for `compare`.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Maximum difference of one column between two trajectory files.
    Compare {
        file_a: PathBuf,
        file_b: PathBuf,
        #[arg(long, default_value = "p_e")]
        column: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { config, tol } => commands::validate(config, *tol),
        Command::Evolve { common, grid, method } => commands::evolve(EvolveArgs {
            config: &common.config,
            out: common.out.as_deref(),
            t_max: grid.t_max,
            steps: grid.steps,
            method: *method,
        }),
        Command::Twoband { mode, common, grid, seed, realizations, tol } => commands::twoband(TwoBandArgs {
            mode: *mode,
            config: &common.config,
            out: common.out.as_deref(),
            t_max: grid.t_max,
            steps: grid.steps,
            seed: *seed,
            realizations: *realizations,
            tol: *tol,
        }),
        Command::Compare { file_a, file_b, column, tol } => commands::compare(file_a, file_b, column, *tol),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
