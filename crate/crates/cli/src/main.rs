//! `sdnn`: Table 1 reproduction, single solves, frequency scans and
//! convergence studies for the coupled Stokes-Darcy benchmark.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stokes_darcy_nn::manufactured::CaseLabel;
use stokes_darcy_nn::weights::KmaxConvention;
use stokes_darcy_nn::Execution;

#[derive(Parser, Debug)]
#[command(name = "sdnn", version, about = "Coupled Stokes-Darcy solver with a weighted Neumann-Neumann preconditioner")]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reproduce the 16-row weight / iteration table; exit code 1 if any row fails.
    Table1(Table1Args),
    /// Solve one benchmark configuration.
    Run(RunArgs),
    /// Sample the reduction factor over the frequency band, optionally with a weight grid.
    RhoScan(ScanArgs),
    /// Monolithic solves on several levels with fitted error orders.
    Convergence(ConvergenceArgs),
}

#[derive(Args, Debug, Clone)]
struct Shared {
    /// How k_max relates to the mesh: `dof` uses the interface node spacing h/2, `element` uses h.
    #[arg(long, default_value = "dof")]
    kmax_convention: KmaxConvention,

    /// Directory for CSV/JSON output (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[command(flatten)]
    shared: Shared,

    /// Relative residual tolerance for PCG and CG.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    /// Mesh levels to include.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4])]
    levels: Vec<u32>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Pcg,
    Cg,
    Richardson,
    Nn,
    Monolithic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum WeightsArg {
    Optimal,
    Asymptotic,
    Manual,
}

#[derive(Args, Debug, Clone)]
struct WeightChoice {
    /// Where the preconditioner weights come from.
    #[arg(long, value_enum, default_value = "optimal")]
    weights: WeightsArg,

    /// Fluid weight (implies `--weights manual`).
    #[arg(long)]
    alpha_f: Option<f64>,

    /// Porous weight (implies `--weights manual`).
    #[arg(long)]
    alpha_p: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    case: CaseLabel,

    #[arg(long, default_value_t = 1)]
    level: u32,

    #[arg(long, value_enum, default_value = "pcg")]
    method: MethodArg,

    #[command(flatten)]
    weights: WeightChoice,

    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    #[arg(long, default_value_t = 500)]
    max_iter: usize,

    /// Also write nodal fields (needs `--out`).
    #[arg(long)]
    fields: bool,

    #[command(flatten)]
    shared: Shared,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    case: CaseLabel,

    #[arg(long, default_value_t = 1)]
    level: u32,

    #[command(flatten)]
    weights: WeightChoice,

    /// Log-spaced frequencies in the band.
    #[arg(long, default_value_t = 2000)]
    samples: usize,

    /// Points per axis of a log10 weight grid over [-16, 0.5]^2; 0 skips the grid.
    #[arg(long, default_value_t = 0)]
    grid: usize,

    #[command(flatten)]
    shared: Shared,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    /// Cases to study; all four by default.
    #[arg(long, value_delimiter = ',')]
    case: Vec<CaseLabel>,

    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4])]
    levels: Vec<u32>,

    #[command(flatten)]
    shared: Shared,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let result = match cli.command {
        Command::Table1(a) => commands::table1(&a, exec),
        Command::Run(a) => commands::run(&a, exec),
        Command::RhoScan(a) => commands::rho_scan(&a, exec).map(|_| true),
        Command::Convergence(a) => commands::convergence(&a, exec).map(|_| true),
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
