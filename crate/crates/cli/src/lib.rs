//! Command-line front end for `landau-asym`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 no contraction certificate,
//! 4 divergence of the Picard iteration, 1 anything else.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod contour;
pub mod verify;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_CERTIFICATE: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "landau-asym", version, about = "Landau solutions and the far field of steady Navier-Stokes flows")]
pub struct Cli {
    /// JSON run configuration (used by `solve`; unknown keys are rejected).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [env: LANDAU_ASYM_THREADS].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for the randomized operator-norm estimates.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate U^b, P^b (or the regularized pair) at points.
    Landau(LandauArgs),
    /// Force magnitude beta(A).
    Beta(BetaArgs),
    /// Inverse of beta: the A producing a given force magnitude.
    Gamma(GammaArgs),
    /// Net force and outflow through spheres.
    Force(ForceArgs),
    /// Run a solve scenario and report the far-field asymptotics.
    Solve(SolveArgs),
    /// SVG of stream-function contours in a meridian half-plane.
    Stream(StreamArgs),
    /// Run a battery of invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct LandauArgs {
    /// Landau parameter A > 1 (axis e3).
    #[arg(long = "A", conflicts_with = "b")]
    pub a: Option<f64>,
    /// Force vector b as `x,y,z`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub b: Option<Vec<f64>>,
    /// CSV with columns x,y,z; a meridian sample is used when absent.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Evaluate the field regularized inside this r0.
    #[arg(long)]
    pub regularized: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long = "A")]
    pub a: f64,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[arg(long)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct ForceArgs {
    /// Built-in Landau field with parameter A.
    #[arg(long = "A", group = "source")]
    pub a: Option<f64>,
    /// Built-in Landau field with force b (`x,y,z`).
    #[arg(long, group = "source", value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub b: Option<Vec<f64>>,
    /// Built-in canonical outflow field with flux PHI.
    #[arg(long, group = "source")]
    pub outflow: Option<f64>,
    /// CSV field x,y,z,ux,uy,uz,p on a spherical tensor grid.
    #[arg(long, group = "source")]
    pub field: Option<PathBuf>,
    /// Sphere radii, comma separated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1)]
    pub radii: Vec<f64>,
    /// Angular quadrature order.
    #[arg(long, default_value_t = 16)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Scenario when no --config is given: `landau-exterior` or `dipole`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Force vector for `landau-exterior`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub b: Option<Vec<f64>>,
    /// Strength for `dipole`.
    #[arg(long)]
    pub strength: Option<f64>,
    /// Decay exponent of the solution space, in (1, 2).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Landau stream function with parameter A.
    #[arg(long = "A", group = "stream")]
    pub a: Option<f64>,
    /// Stokeslet stream function.
    #[arg(long, group = "stream")]
    pub stokeslet: bool,
    /// Force-normalized Landau family at force eps.
    #[arg(long, group = "stream")]
    pub eps: Option<f64>,
    /// Contour levels, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub levels: Option<Vec<f64>>,
    /// Outer radius of the plotted half-disc.
    #[arg(long, default_value_t = 5.0)]
    pub r_max: f64,
    /// Cells per direction of the (r, θ) grid.
    #[arg(long, default_value_t = 400)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Landau,
    Green,
    Flux,
    Solver,
    Counterexample,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(landau_asym::Error),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use landau_asym::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::InvalidConfig(_) | E::InvalidInput(_) | E::Domain(_)) => EXIT_CONFIG,
            CliError::Core(E::NoCertificate { .. }) => EXIT_NO_CERTIFICATE,
            CliError::Core(E::Divergence { .. }) => EXIT_DIVERGENCE,
            _ => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<landau_asym::Error> for CliError {
    fn from(e: landau_asym::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn configure_threads(cli: &Cli) -> CliResult<()> {
    let threads = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("LANDAU_ASYM_THREADS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| CliError::Config(format!("LANDAU_ASYM_THREADS={s} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // a second initialization (tests calling run twice) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a parsed command line and returns the exit code; diagnostics go to stderr.
pub fn run(cli: &Cli) -> i32 {
    let result = configure_threads(cli).and_then(|_| match &cli.command {
        Command::Landau(a) => commands::cmd_landau(cli, a),
        Command::Beta(a) => commands::cmd_beta(cli, a),
        Command::Gamma(a) => commands::cmd_gamma(cli, a),
        Command::Force(a) => commands::cmd_force(cli, a),
        Command::Solve(a) => commands::cmd_solve(cli, a),
        Command::Stream(a) => commands::cmd_stream(cli, a),
        Command::Verify(a) => verify::cmd_verify(cli, a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
