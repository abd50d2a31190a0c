use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use melan_cli::run::run;
use melan_cli::{Mode, Overrides, RunConfig};

/// Solvers and applicability checks for the Melan suspension-bridge equation.
#[derive(Debug, Parser)]
#[command(name = "melan", version)]
struct Cli {
    /// Workflow to run.
    #[arg(value_enum)]
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Grid points (odd), overriding `numerics.grid_points`.
    #[arg(long)]
    grid: Option<usize>,
    /// Gap tolerance of the monotone iteration.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Proceed past failed hypotheses, labelling results as unverified.
    #[arg(long)]
    force: bool,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { grid: cli.grid, tol: cli.tol, max_iter: cli.max_iter, force: cli.force, out: cli.out };
    let result = RunConfig::load_file(&cli.config).and_then(|mut cfg| {
        cfg.apply(&overrides);
        run(cli.mode, &cfg)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("melan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
