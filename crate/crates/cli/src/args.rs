use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use treecast::params::{AlphaSpec, Family, ModelParams};
use treecast::walk::{BoundaryMode, StoppingConfig};
use treecast::Result;

#[derive(Debug, Parser)]
#[command(
    name = "treecast",
    version,
    about = "Broadcasting on random recursive trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow a random recursive tree.
    Grow(GrowArgs),
    /// Broadcast a color down a growing tree and tally pair counts.
    Broadcast(BroadcastArgs),
    /// Run the Δ walk, optionally recording a trajectory and stopping times.
    Walk(WalkArgs),
    /// Simulate the four-type Pólya urn.
    Urn(UrnArgs),
    /// Replacement matrix and eigen-structure.
    Spectrum(PointArgs),
    /// Critical flip probability and regime classification.
    Regime(PointArgs),
    /// Exact distribution of (Δ₁, Δ₂) by dynamic programming.
    Oracle(OracleArgs),
    /// Monte Carlo estimate of the majority-estimator error.
    Rmaj(RmajArgs),
    /// Error estimates over a grid of flip probabilities.
    Sweep(RmajArgs),
    /// Stopping-time, supermartingale and concentration diagnostics.
    Diagnostics(DiagnosticsArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Tree family.
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Nonnegative attachment parameter α.
    #[arg(
        long,
        required_unless_present = "alpha_neg_d",
        conflicts_with = "alpha_neg_d"
    )]
    pub alpha: Option<f64>,
    /// Use α = −1/d.
    #[arg(long = "alpha-neg-d", value_name = "D")]
    pub alpha_neg_d: Option<u32>,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: treecast::Error| e.to_string())
}

impl ModelArgs {
    pub fn params(&self) -> Result<ModelParams> {
        let spec = match (self.alpha, self.alpha_neg_d) {
            (_, Some(d)) => AlphaSpec::NegativeReciprocal(d),
            (Some(a), None) => AlphaSpec::NonNegative(a),
            (None, None) => unreachable!("clap requires one alpha flag"),
        };
        ModelParams::new(self.family, spec)
    }
}

#[derive(Debug, Args)]
pub struct GrowArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of vertices.
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Write the parent array as text instead of printing JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Fused,
    Explicit,
}

#[derive(Debug, Args)]
pub struct BroadcastArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub q: f64,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "fused")]
    pub mode: ModeArg,
    /// Include the (Δ₁, Δ₂) trajectory in the output.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Limit,
    PerStep,
}

impl From<BoundaryArg> for BoundaryMode {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Limit => BoundaryMode::Limit,
            BoundaryArg::PerStep => BoundaryMode::PerStep,
        }
    }
}

#[derive(Debug, Args)]
pub struct StoppingArgs {
    /// Exponent γ in A = q^(γ−½).
    #[arg(long, default_value_t = StoppingConfig::DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Constant c̃ in B; defaults to the smallest admissible value plus 0.1.
    #[arg(long = "c-tilde")]
    pub c_tilde: Option<f64>,
    /// Use Z_α(∞) or Z_α(n) inside B.
    #[arg(long, value_enum, default_value = "limit")]
    pub boundary: BoundaryArg,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub q: f64,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Record the trajectory.
    #[arg(long)]
    pub trajectory: bool,
    /// Keep every k-th trajectory point.
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    /// Record Y(n) = n/(Δ₁+αΔ₂)² along the trajectory.
    #[arg(long = "track-y")]
    pub track_y: bool,
    /// Detect τ_high and τ_low.
    #[arg(long)]
    pub stopping: bool,
    #[command(flatten)]
    pub stopping_args: StoppingArgs,
    /// Write the trajectory as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UrnArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub q: f64,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub q: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub q: f64,
    #[arg(long = "N")]
    pub n: u64,
    /// Print only the exact majority-estimator error.
    #[arg(long)]
    pub rmaj: bool,
    /// Largest N the dynamic program accepts.
    #[arg(long, default_value_t = treecast::oracle::DEFAULT_CAP)]
    pub cap: u64,
    /// Write the distribution as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Explicit flip probabilities, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required_unless_present = "q_start",
        conflicts_with_all = ["q_start", "q_end", "q_step"]
    )]
    pub q: Option<Vec<f64>>,
    #[arg(long = "q-start", requires_all = ["q_end", "q_step"])]
    pub q_start: Option<f64>,
    #[arg(long = "q-end")]
    pub q_end: Option<f64>,
    #[arg(long = "q-step")]
    pub q_step: Option<f64>,
}

impl GridArgs {
    pub fn grid(&self) -> Result<Vec<f64>> {
        match (&self.q, self.q_start, self.q_end, self.q_step) {
            (Some(q), ..) => Ok(q.clone()),
            (None, Some(s), Some(e), Some(st)) => treecast::experiments::q_grid(s, e, st),
            _ => unreachable!("clap enforces the grid flags"),
        }
    }
}

#[derive(Debug, Args)]
pub struct RmajArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Write CSV instead of printing JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long = "N")]
    pub n: u64,
    /// Number of trajectories per flip probability.
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub stopping: StoppingArgs,
    /// Log-spaced time bins for the supermartingale check.
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Write the summary table as CSV instead of printing JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
