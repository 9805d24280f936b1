//! `calabi`: solve the radial potential, verify the solved geometry, map
//! point batches through the symplectomorphism, scan sectional curvature,
//! and emit SVG plots.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 I/O.

// Negated comparisons like `!(x0 < x1)` are NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod batch;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;

use calabi::geometry::GeometryError;
use calabi::symplectic::MapError;
use calabi::verify::VerifyError;
use calabi::RadialError;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<RadialError> for CliError {
    fn from(e: RadialError) -> Self {
        match e {
            RadialError::UnsupportedDimension { .. }
            | RadialError::InvalidParams { .. }
            | RadialError::InvalidHandoff { .. }
            | RadialError::OutOfRange { .. }
            | RadialError::UseSeriesResidual { .. }
            | RadialError::InvalidScale { .. }
            | RadialError::InvalidProfile(_) => CliError::Validation(e.to_string()),
            RadialError::IncompleteProfile { .. }
            | RadialError::InternalConsistency { .. }
            | RadialError::InsufficientTail { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::OutsideComputedDomain { .. }
            | GeometryError::OutsideManifold { .. }
            | GeometryError::StencilOutOfDomain { .. }
            | GeometryError::InvalidStep { .. }
            | GeometryError::ScanRadiusOutOfRange { .. }
            | GeometryError::InvalidScanConfig { .. }
            | GeometryError::DimensionMismatch { .. } => CliError::Validation(e.to_string()),
            GeometryError::DegeneratePlane { .. }
            | GeometryError::SingularMetric
            | GeometryError::NonFiniteSample { .. } => CliError::Numerical(e.to_string()),
            GeometryError::Radial(inner) => CliError::from(inner),
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::ImageBeyondProfile { .. }
            | MapError::InvalidFraction { .. }
            | MapError::FiberDimensionMismatch { .. } => CliError::Validation(e.to_string()),
            MapError::InverseDiverged { .. } => CliError::Numerical(e.to_string()),
            MapError::Geometry(inner) => CliError::from(inner),
            MapError::Radial(inner) => CliError::from(inner),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::InvalidConfig { .. } => CliError::Validation(e.to_string()),
            VerifyError::Radial(inner) => CliError::from(inner),
            VerifyError::Geometry(inner) => CliError::from(inner),
            VerifyError::Map(inner) => CliError::from(inner),
            VerifyError::Serialize(inner) => CliError::Io(inner.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "calabi",
    version,
    about = "Radial potential solver and symplectic-map toolkit",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the radial profile and write it as JSON
    Solve(SolveArgs),
    /// Run the verification suite against a stored profile
    Verify(VerifyArgs),
    /// Map a CSV batch of tube points through the gradient map
    Map(MapArgs),
    /// Map a CSV batch of image points back through the inverse
    Invmap(MapArgs),
    /// Sample sectional curvatures and plot their distribution
    Curvature(CurvatureArgs),
    /// Emit SVG plots of a stored profile
    Plot(PlotArgs),
    /// Rescale a stored profile by a positive factor
    Rescale(RescaleArgs),
}

#[derive(Args)]
pub struct SolveArgs {
    /// Complex dimension n; the spatial slice is an n-ball
    #[arg(long)]
    n: Option<u32>,
    /// Center value Y(0)
    #[arg(long)]
    y0: Option<f64>,
    /// Relative tolerance of the integrator
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance of the integrator
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Stop integrating once Y' reaches this value
    #[arg(long)]
    threshold: Option<f64>,
    /// Step budget of the integrator
    #[arg(long)]
    max_steps: Option<usize>,
    /// Allow the out-of-scope dimension n = 1 (closed-form test case)
    #[arg(long)]
    experimental: bool,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output profile path
    #[arg(long, default_value = "profile.json")]
    out: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Stored profile to verify
    #[arg(long)]
    profile: PathBuf,
    /// Seed of the sample generator
    #[arg(long)]
    seed: Option<u64>,
    /// Random samples per pointwise check
    #[arg(long)]
    samples: Option<usize>,
    /// Output report path
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Override the ODE-residual gate
    #[arg(long)]
    tol_ode: Option<f64>,
    /// Override the Monge-Ampere residual gate
    #[arg(long)]
    tol_monge_ampere: Option<f64>,
    /// Override the analytic-pullback gate
    #[arg(long)]
    tol_pullback_analytic: Option<f64>,
    /// Override the finite-difference pullback gate
    #[arg(long)]
    tol_pullback_fd: Option<f64>,
    /// Override the roundtrip gate
    #[arg(long)]
    tol_roundtrip: Option<f64>,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
pub struct MapArgs {
    /// Stored profile defining the map
    #[arg(long)]
    profile: PathBuf,
    /// Input CSV batch
    #[arg(long)]
    input: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SyntheticKind {
    /// Quadratic potential alpha r^2: flat metric, zero curvature
    Flat,
}

#[derive(Args)]
pub struct CurvatureArgs {
    /// Stored profile to scan (omit when using --synthetic)
    #[arg(long, required_unless_present = "synthetic")]
    profile: Option<PathBuf>,
    /// Scan a synthetic control potential instead of a stored profile
    #[arg(long, value_enum)]
    synthetic: Option<SyntheticKind>,
    /// Dimension of the synthetic potential
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Quadratic coefficient of the flat control, Y = alpha r^2
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Domain radius of the synthetic potential
    #[arg(long, default_value_t = 10.0)]
    r_max: f64,
    /// Seed of the sample generator
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sampled planes
    #[arg(long)]
    samples: Option<usize>,
    /// Spatial sampling radius (default half the computed radius)
    #[arg(long)]
    radius: Option<f64>,
    /// Finite-difference step of the curvature stencil
    #[arg(long)]
    step: Option<f64>,
    /// Histogram bin count
    #[arg(long)]
    bins: Option<usize>,
    /// Histogram lower edge
    #[arg(long)]
    k_lo: Option<f64>,
    /// Histogram upper edge
    #[arg(long)]
    k_hi: Option<f64>,
    /// Output scan JSON path
    #[arg(long, default_value = "curvature.json")]
    out: PathBuf,
    /// Output SVG path (histogram plus radial sections)
    #[arg(long, default_value = "curvature.svg")]
    svg: PathBuf,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Stored profile to plot
    #[arg(long)]
    profile: PathBuf,
    /// Directory receiving potential.svg, gradient.svg, properness.svg
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Number of sample radii per curve
    #[arg(long)]
    samples: Option<usize>,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
pub struct RescaleArgs {
    /// Stored profile to rescale
    #[arg(long)]
    profile: PathBuf,
    /// Scale factor; the result matches a direct solve at y0 + 2n ln(lambda)
    #[arg(long)]
    lambda: Option<f64>,
    /// Output profile path
    #[arg(long, default_value = "rescaled.json")]
    out: PathBuf,
    /// JSON config file; flags take precedence over its values
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Map(args) => commands::map_batch(&args, false),
        Command::Invmap(args) => commands::map_batch(&args, true),
        Command::Curvature(args) => commands::curvature(&args),
        Command::Plot(args) => commands::plot(&args),
        Command::Rescale(args) => commands::rescale(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
