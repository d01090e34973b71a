use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "einlab",
    version,
    about = "Experiments on the S_gamma + alpha*S_delta family of divergent series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// gamma, delta, Ein(1) and Ei(1) along independent routes
    Constants(ConstantsArgs),
    /// Partial-sum trace of the combined series at one alpha
    Prop1(Prop1Args),
    /// Verdict and optimal truncation for alphas around a center
    AlphaScan(AlphaScanArgs),
    /// Laplace-Borel sums and radius-of-convergence estimates
    Borel(BorelArgs),
    /// Stokes constant extraction near u = -1
    Stokes(StokesArgs),
    /// Gumbel moments by quadrature, series and Monte Carlo
    Moments(MomentsArgs),
    /// Order-n generalized series trace
    GenSeries(GenSeriesArgs),
    /// Run every acceptance criterion
    VerifyAll(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Decimal digits of precision
    #[arg(long, env = "EINLAB_DIGITS", default_value_t = 60)]
    pub digits: u32,
    /// Quadrature node budget
    #[arg(long)]
    pub quad_budget: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantArg {
    Gamma,
    Delta,
    Ein1,
    Ei1,
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Restrict to these constants
    #[arg(long, value_enum, value_delimiter = ',')]
    pub name: Vec<ConstantArg>,
}

#[derive(Args, Debug)]
pub struct Prop1Args {
    #[command(flatten)]
    pub common: Common,
    /// "1/e", "1/e+1e-6", a rational "p/q" or a decimal
    #[arg(long, default_value = "1/e", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value_t = 1000)]
    pub terms: u64,
    /// Also check the exact finite identity with this inner cutoff M (rational alpha only)
    #[arg(long)]
    pub identity_m: Option<u64>,
}

#[derive(Args, Debug)]
pub struct AlphaScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "1/e", allow_hyphen_values = true)]
    pub center: String,
    /// Comma-separated offsets added to the center
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub offsets: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub terms: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindArg {
    Gamma,
    Delta,
    Combined,
}

#[derive(Args, Debug)]
pub struct BorelArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = KindArg::Combined)]
    pub kind: KindArg,
    /// Coefficient of the delta part for --kind combined
    #[arg(long, default_value = "1/e", allow_hyphen_values = true)]
    pub alpha: String,
    /// Coefficients used for the radius estimate
    #[arg(long, default_value_t = 200)]
    pub terms: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StokesArg {
    Gamma,
    Delta,
    Combined,
    Generalized,
}

#[derive(Args, Debug)]
pub struct StokesArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = StokesArg::Gamma)]
    pub target: StokesArg,
    #[arg(long, default_value = "1/e", allow_hyphen_values = true)]
    pub alpha: String,
    /// Order for --target generalized
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    /// Ladder points
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Also run Monte Carlo with this many samples
    #[arg(long)]
    pub mc_samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GenSeriesArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value = "1/e", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value_t = 1000)]
    pub terms: u64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Seed for every random choice; required so runs are reproducible
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: u64,
    /// Run only these criteria
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}
