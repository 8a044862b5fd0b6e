use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spikecov::harness::sweep::{Axis, EstimatorKind, DEFAULT_TRIALS};

#[derive(Debug, Parser)]
#[command(name = "spikecov", version, about = "Spiked covariance estimation, sweeps and detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a covariance from one training block.
    Estimate(EstimateArgs),
    /// Monte Carlo metric table along one axis.
    Sweep(SweepArgs),
    /// Run the low-rank detector on one test snapshot.
    Detect(DetectArgs),
    /// Time the eigendecomposition and the shrinkage step.
    Bench(BenchArgs),
    /// Check the asymptotic law of shrunk spike eigenvalues.
    VerifyClt(CltArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Sweep(_) => "sweep",
            Command::Detect(_) => "detect",
            Command::Bench(_) => "bench",
            Command::VerifyClt(_) => "verify-clt",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Shrinkage,
    Rcml,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Shrinkage => EstimatorKind::Shrinkage,
            EstimatorArg::Rcml => EstimatorKind::Rcml,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    N,
    Doppler,
    Angle,
    Snr,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::N => Axis::N,
            AxisArg::Doppler => Axis::Doppler,
            AxisArg::Angle => Axis::Angle,
            AxisArg::Snr => Axis::Snr,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Data cube stem (`<stem>.bin` + `<stem>.json`) instead of a synthetic draw.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Training snapshots drawn from the scenario.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "shrinkage")]
    pub estimator: EstimatorArg,
    /// Clipping rank; defaults to the shrinkage spike count.
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "n")]
    pub axis: AxisArg,
    /// Both estimators when omitted.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Training size for the Doppler, angle and SNR axes.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 101)]
    pub doppler_grid: usize,
    #[arg(long, default_value_t = 181)]
    pub angle_grid: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    pub pfa: Vec<f64>,
    /// SNR grid in dB for the `snr` axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    #[arg(long)]
    pub doppler: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub angle_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Clutter rank to project out; the estimated spike count by default.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.001")]
    pub pfa: Vec<f64>,
    /// Injected target SNR in dB; no target when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub doppler: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub angle_deg: Option<f64>,
    /// Trial index under the seed.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024")]
    pub p: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CltArgs {
    #[arg(long, value_delimiter = ',', default_value = "5,3,2.5")]
    pub spikes: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    #[arg(long, default_value_t = 400)]
    pub p: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
