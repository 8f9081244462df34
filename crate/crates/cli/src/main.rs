//! `cylpot`: command-line driver for the layer-potential solver.
//!
//! Exit status is 0 on success, 1 on invalid input and 2 when a computed
//! quantity misses its tolerance.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Failure, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "cylpot", version, about = "Layer potentials for Delta + V on the flat cylinder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Model configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Directory for reports; created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "cylpot-out")]
    out: PathBuf,
    /// Seed for randomized checks; recorded in every report.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Tolerance override, repeatable.
    #[arg(long, global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Grid or resolution override, repeatable.
    #[arg(long, global = true, value_name = "NAME=VALUE")]
    grid: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-section eigenvalues and residuals.
    Spectrum,
    /// Green's function against the image sum and the fundamental-solution test.
    KernelCheck,
    /// Offset-curve limits against the jump relations.
    JumpCheck,
    /// Dirichlet solve evaluated at probe points.
    Solve {
        /// Boundary data: `mode:xi=X[,amp=A][,curve=I]`, `green:x=X,theta=T` or `const:value=C`.
        #[arg(long, value_name = "SPEC")]
        bc: Option<String>,
        /// CSV of `x,theta` probe points.
        #[arg(long, value_name = "PATH")]
        probes: Option<PathBuf>,
    },
    /// Dirichlet-to-Neumann matrix with symmetry and positivity checks.
    Dtn,
    /// Inverse norms of the indicial family over a tau grid.
    TauSweep,
    /// Rellich and divergence identities for random smooth data.
    RellichCheck,
    /// The full acceptance suite.
    Acceptance,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::KernelCheck => "kernel-check",
            Command::JumpCheck => "jump-check",
            Command::Solve { .. } => "solve",
            Command::Dtn => "dtn",
            Command::TauSweep => "tau-sweep",
            Command::RellichCheck => "rellich-check",
            Command::Acceptance => "acceptance",
        }
    }
}

fn run(cli: Cli) -> Result<commands::Done, Failure> {
    let name = cli.command.name();
    let (tol_names, grid_names) = commands::allowed(name);
    let rc = RunConfig {
        subcommand: name.to_string(),
        model: cli.common.model,
        out: cli.common.out,
        seed: cli.common.seed,
        tol: Overrides::parse("tol", &cli.common.tol, tol_names)?,
        grid: Overrides::parse("grid", &cli.common.grid, grid_names)?,
    };
    rc.prepare_out()?;
    match &cli.command {
        Command::Spectrum => commands::spectrum(&rc),
        Command::KernelCheck => commands::kernel_check(&rc),
        Command::JumpCheck => commands::jump_check_cmd(&rc),
        Command::Solve { bc, probes } => commands::solve(&rc, bc.as_deref(), probes.as_deref()),
        Command::Dtn => commands::dtn(&rc),
        Command::TauSweep => commands::tau_sweep(&rc),
        Command::RellichCheck => commands::rellich_check(&rc),
        Command::Acceptance => commands::acceptance_cmd(&rc),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(done) => {
            for line in &done.lines {
                println!("{line}");
            }
            for f in &done.failures {
                eprintln!("cylpot: tolerance: {f}");
            }
            ExitCode::from(if done.failures.is_empty() { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("cylpot: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
