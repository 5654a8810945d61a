use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kgm_cli::config::GridCounts;
use kgm_cli::{exit, render, run, CliError, Mode, Overrides, RunConfig};

/// Electrostatic Klein-Gordon-Maxwell standing waves on a box with a
/// prescribed boundary flux.
#[derive(Parser)]
#[command(name = "kgm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the reduced functional of the linear problem.
    SolveLinear(RunArgs),
    /// Mountain pass for the power nonlinearity.
    SolveNonlinear(RunArgs),
    /// Several solution levels for an odd power nonlinearity.
    Multi(RunArgs),
    /// Certify stored fields `u` and `phi`.
    Verify(RunArgs),
    /// Dirichlet eigenvalues and the smallness conditions of the datum.
    Spectrum(RunArgs),
    /// Print the certificate table of a report.
    Render {
        /// Path of a `report.json`.
        report: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gradient-norm tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Node counts `NX,NY,NZ`.
    #[arg(long)]
    grid: Option<GridCounts>,
    /// Report the charge in units where the potential equation carries 4 pi.
    #[arg(long)]
    physical_units: bool,
}

fn execute(mode: Mode, args: &RunArgs) -> Result<u8, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply(&Overrides {
        seed: args.seed,
        out: args.out.clone(),
        tol: args.tol,
        grid: args.grid.map(|g| g.0),
        physical_units: args.physical_units,
    });
    let report = run(&cfg, mode)?;
    let (table, _) = render(&report.to_json())?;
    print!("{table}");
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    println!("report: {}", cfg.output.dir.join("report.json").display());
    Ok(report.status.exit_code())
}

fn render_file(path: &PathBuf) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let (table, ok) = render(&text)?;
    print!("{table}");
    Ok(if ok { exit::SUCCESS } else { exit::CHECK_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SolveLinear(a) => execute(Mode::SolveLinear, a),
        Command::SolveNonlinear(a) => execute(Mode::SolveNonlinear, a),
        Command::Multi(a) => execute(Mode::Multi, a),
        Command::Verify(a) => execute(Mode::Verify, a),
        Command::Spectrum(a) => execute(Mode::Spectrum, a),
        Command::Render { report } => render_file(report),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
