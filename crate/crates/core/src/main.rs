use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use condmeas::cli::{emit_figure_data, run_scenario, sweep_coupling, Figure, RunOptions};
use condmeas::scenario::Paths;
use condmeas::Result;

/// Conditioned von Neumann measurement statistics, by grid simulation and closed forms.
#[derive(Parser)]
#[command(name = "condmeas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Detector grid size (power of two, ≥ 256).
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Computation paths to run.
    #[arg(long, global = true, value_enum)]
    paths: Option<Paths>,
    /// Relative tolerance for path agreement.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario and write a JSON report.
    Run { scenario: PathBuf },
    /// Sweep the coupling strength of a scenario and write a CSV.
    Sweep { scenario: PathBuf },
    /// Write the data behind a figure preset.
    Figure {
        #[arg(value_enum)]
        which: Figure,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<()> {
    let opts = RunOptions {
        workers: cli.common.workers,
        grid_points: cli.common.grid_points,
        paths: cli.common.paths,
        tolerance: cli.common.tolerance,
    };
    match cli.command {
        Command::Run { scenario } => {
            let (path, report) = run_scenario(&scenario, &opts)?;
            println!("{}", path.display());
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            report.status()
        }
        Command::Sweep { scenario } => {
            let (path, rows) = sweep_coupling(&scenario, &opts)?;
            println!("{}", path.display());
            let flagged = rows.iter().filter(|r| !r.error.is_empty()).count();
            if flagged > 0 {
                eprintln!("warning: {flagged} of {} rows carry an error marker", rows.len());
            }
            Ok(())
        }
        Command::Figure { which, out } => {
            for path in emit_figure_data(which, &out, &opts)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
