use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "folhodge",
    version,
    about = "Twisted basic cohomology of reduced Riemannian foliation models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Validation gates and the operator identity residuals.
    Verify(Common),
    /// Basic and twisted Betti numbers, Euler characteristics, tautness and signature.
    Betti(Common),
    /// Leading eigenvalues of a Laplacian.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Operator name, e.g. twisted-laplacian, basic-laplacian, Delta_tilde.
        #[arg(long, default_value = "twisted-laplacian")]
        op: String,
        /// Form degree; all degrees when omitted.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Compare the spectra in complementary degrees through the transverse star.
    Duality(Common),
    /// Compare the twisted spectra before and after a change of potential.
    Conformal {
        #[command(flatten)]
        common: Common,
        /// Fourier term of the potential change as MODE:COS:SIN, MODE comma separated.
        #[arg(long = "h", required = true, value_name = "MODE:COS:SIN")]
        h: Vec<String>,
    },
    /// Betti bookkeeping for a suspension foliation.
    Suspend {
        /// Preset name (7.2 or 7.3, optionally prefixed with suspension-).
        #[arg(long, required_unless_present_any = ["input", "catalog"], conflicts_with_all = ["input", "catalog"])]
        preset: Option<String>,
        /// Catalog name suspension-7.2 or suspension-7.3.
        #[arg(long, conflicts_with = "input")]
        catalog: Option<String>,
        /// JSON file with base_betti, pattern, fiber_codim, oriented, taut.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write one operator block as a raw matrix plus a JSON descriptor.
    Dump {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        op: String,
        #[arg(long)]
        degree: usize,
    },
    /// Print the canonical model file.
    Model(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Number of eigenvalues.
    #[arg(long)]
    pub count: Option<usize>,
    /// Relative harmonic threshold.
    #[arg(long)]
    pub harmonic_threshold: Option<f64>,
    /// Largest acceptable identity residual.
    #[arg(long)]
    pub identity_tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Catalog model: carriere, flat-torus, carriere-product.
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    pub catalog: Option<String>,
    /// Model file (JSON).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Grid points per active axis.
    #[arg(short = 'N', long = "grid")]
    pub grid: Option<usize>,
    /// Eigenvalue of the hyperbolic monodromy (carriere models).
    #[arg(long, conflicts_with = "lambda_trace")]
    pub lambda: Option<f64>,
    /// Trace of the hyperbolic monodromy (carriere models).
    #[arg(long)]
    pub lambda_trace: Option<f64>,
    /// Codimension of the flat torus.
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    /// Number of extra circles in carriere-product.
    #[arg(long, default_value_t = 1)]
    pub circles: usize,
    /// Give each extra circle its own periodic coordinate.
    #[arg(long)]
    pub active_circles: bool,
    /// Fourier term of the flat-torus potential, MODE:COS:SIN.
    #[arg(long, value_name = "MODE:COS:SIN")]
    pub potential: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}
