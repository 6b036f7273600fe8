//! `crp` — generate, solve, and benchmark sector conflict resolution
//! instances.
//!
//! Set `CD_LOG` (e.g. `CD_LOG=info`) for log output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crp_cli::commands::{self, GeneratorArgs, SolverArgs};

#[derive(Parser, Debug)]
#[command(
    name = "crp",
    about = "Sector conflict resolution: cluster closest-approach events, \
             bend flights onto arc legs, disperse the worst offenders across levels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded random scenario file.
    Generate {
        #[command(flatten)]
        gen: GeneratorArgs,
        /// Scenario seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (receives scenario.json).
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve a scenario file and write solution, metrics, and histograms.
    Solve {
        /// Scenario JSON produced by `generate`.
        scenario: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Seed for every randomized choice in the solver.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate and solve a family of seeded instances; write aggregates.
    Batch {
        #[command(flatten)]
        gen: GeneratorArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Base seed; instance i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of instances.
        #[arg(long, default_value_t = 20)]
        instances: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Summarize an existing solution file.
    Report {
        /// Solution JSON produced by `solve`.
        solution: PathBuf,
        /// Optional directory for regenerated histogram CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // Die quietly when piped into `head` instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("CD_LOG", "warn")).init();
    // Usage errors exit 1; code 2 is reserved for partial resolutions.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            err.print().ok();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            err.print().ok();
            return ExitCode::FAILURE;
        }
    };
    let result = match &cli.command {
        Command::Generate { gen, seed, out } => {
            commands::cmd_generate(gen, *seed, out).map(|()| 0)
        }
        Command::Solve { scenario, solver, seed, out } => {
            commands::cmd_solve(scenario, solver, *seed, out)
        }
        Command::Batch { gen, solver, seed, instances, out } => {
            commands::cmd_batch(gen, solver, *seed, *instances, out)
        }
        Command::Report { solution, out } => {
            commands::cmd_report(solution, out.as_deref()).map(|()| 0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
