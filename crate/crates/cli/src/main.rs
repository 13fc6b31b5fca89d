//! `cbpost` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

mod commands;
mod config;
mod report;

/// Contrast-based posterior inference for spatial models.
#[derive(Parser, Debug)]
#[command(name = "cbpost", version)]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    /// TOML file of `flag = value` pairs used for flags not given on the command line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a simulated data set.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Fit a case-study model to a data file.
    #[command(subcommand)]
    Fit(FitCmd),
    /// Repeated simulate-and-fit study of interval coverage.
    #[command(subcommand)]
    Coverage(CoverageCmd),
    /// Run the simulation and numerical oracles.
    Validate(ValidateArgs),
}

#[derive(Subcommand, Debug)]
pub enum SimulateCmd {
    /// Gaussian field with exponential variogram 1 - exp(-theta h).
    Grf(GrfArgs),
    /// Autologistic binary field by Gibbs sampling.
    Markov(MarkovSimArgs),
    /// Transects across a Poisson cylinder surface.
    Cylinders(CylinderArgs),
}

#[derive(Args, Debug)]
pub struct GrfArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Distance between neighbouring nodes.
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
}

#[derive(Args, Debug)]
pub struct MarkovSimArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta1: f64,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub theta2: f64,
    #[arg(long, default_value_t = cbpost::simulate::DEFAULT_SWEEPS)]
    pub sweeps: usize,
}

#[derive(Args, Debug)]
pub struct CylinderArgs {
    #[arg(long, default_value_t = 46.6)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.28)]
    pub beta: f64,
    #[arg(long, default_value_t = 12)]
    pub transects: usize,
    /// Transect length in mm.
    #[arg(long, default_value_t = 1180.0)]
    pub length: f64,
    /// Sampling step in mm.
    #[arg(long, default_value_t = 2.0)]
    pub spacing: f64,
    /// Sample all transects from one simulated plane window instead of
    /// independent line processes.
    #[arg(long)]
    pub plane: bool,
    /// Height of each transect's band in the plane window (mm).
    #[arg(long, default_value_t = 10.0)]
    pub band: f64,
}

#[derive(Subcommand, Debug)]
pub enum FitCmd {
    /// Least-squares variogram fit of a real-valued field.
    Variogram(VariogramFitArgs),
    /// Pseudo-likelihood fit of a binary field.
    Markov(MarkovFitArgs),
    /// Moment fit of cylinder-surface transects.
    Roughness(RoughnessFitArgs),
}

#[derive(Args, Debug)]
pub struct VariogramFitArgs {
    /// Field CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub gamma_reps: u64,
    #[arg(long, default_value_t = 401)]
    pub grid_nodes: usize,
    /// Prior box as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 4.0])]
    pub prior: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Args, Debug)]
pub struct MarkovFitArgs {
    /// Binary field CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    pub reps: u64,
    #[arg(long, default_value_t = cbpost::simulate::DEFAULT_SWEEPS)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 101)]
    pub grid_nodes: usize,
    /// Prior box as `lo1,hi1,lo2,hi2`.
    #[arg(long, value_delimiter = ',', num_args = 4, allow_hyphen_values = true,
          default_values_t = [-1.5, 1.5, -1.5, 1.5])]
    pub prior: Vec<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Args, Debug)]
pub struct RoughnessFitArgs {
    /// Transect manifest.
    #[arg(long)]
    pub input: PathBuf,
    /// Detrending kernel bandwidth in mm.
    #[arg(long, default_value_t = cbpost::roughness::DEFAULT_BANDWIDTH_MM)]
    pub bandwidth: f64,
    /// Use the heights as given.
    #[arg(long)]
    pub no_detrend: bool,
    #[arg(long, default_value_t = 101)]
    pub grid_nodes: usize,
    /// Prior box as `alpha_lo,alpha_hi,beta_lo,beta_hi`.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [1.0, 100.0, 1.0, 5.0])]
    pub prior: Vec<f64>,
    /// Skip the second grid pass around the MAP.
    #[arg(long)]
    pub no_refine: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Subcommand, Debug)]
pub enum CoverageCmd {
    /// Coverage of the variogram MAP intervals.
    Variogram(CoverageArgs),
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    /// Outer replications (simulated data sets).
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Resimulations per fit for Gamma and I.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    pub gamma_reps: u64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Run a single oracle: kappa, moments, variance, gamma-info or derivatives.
    #[arg(long)]
    pub only: Option<String>,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let cmd = Cli::command();
    let args = match config::merge(&cmd, raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let matches = match cmd.try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context::new(&cli.out, cli.seed, &args);
    let outcome = match cli.command {
        Command::Simulate(c) => commands::simulate(&ctx, c),
        Command::Fit(c) => commands::fit(&ctx, c),
        Command::Coverage(CoverageCmd::Variogram(a)) => commands::coverage_variogram(&ctx, &a),
        Command::Validate(a) => commands::validate(&ctx, &a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
