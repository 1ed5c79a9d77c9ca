//! The `dfde` command line.
//!
//! Exit codes: 0 success, 2 invalid input or flags, 3 Picard non-convergence,
//! 4 blow-up, 5 analysis failure.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_BLOW_UP: i32 = 4;
pub const EXIT_ANALYSIS: i32 = 5;

/// Steps per delay when neither the flag nor the config sets it.
pub const DEFAULT_STEPS_PER_DELAY: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "dfde",
    version,
    about = "Delay Caputo fractional differential equations"
)]
pub struct Cli {
    /// Problem configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; a manifest is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress warnings and summaries on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the configured problem and write the trajectory CSV.
    Solve(SolveArgs),
    /// Caputo residual of a trajectory against the configured problem.
    Residual {
        #[arg(long)]
        traj: PathBuf,
    },
    /// Mittag-Leffler growth certificate and exponential-bound probe for a trajectory.
    Certify {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
        lambdas: Vec<f64>,
    },
    /// Explicit solution of D^α x = exp(t²) and its exponential-bound probe.
    Counterexample {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_STEPS_PER_DELAY)]
        steps_per_delay: usize,
        /// Rates to probe; defaults to 1, 2, .., 50.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Evaluate E_α(z).
    Mlf {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        /// Print ln E_α(z) instead.
        #[arg(long)]
        log: bool,
    },
    /// Solve at m, 2m, 4m, .. steps per delay and report observed orders.
    Convergence {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 10)]
        m_start: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Picard,
    Pece,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stop {
    Weighted,
    WeightedAndSup,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Method::Picard)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = Stop::WeightedAndSup)]
    pub stop: Stop,
    /// Corrector sweeps for the PECE method.
    #[arg(long, default_value_t = 1)]
    pub sweeps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub steps_per_delay: Option<usize>,
    /// Per-segment Picard report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// A failed command: exit code plus the diagnostic for standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl std::fmt::Display) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    pub fn invalid(message: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_INVALID, message)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
