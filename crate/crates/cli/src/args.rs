use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "polcomp",
    version,
    about = "Equilibrium solvers for two-party policy competition"
)]
pub struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = polcomp_core::DEFAULT_SEED)]
    pub seed: u64,

    /// Output file (JSON or CSV by subcommand). Printed to stdout if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for batch commands (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Record wall-clock seconds. Without it timing fields are 0 and output
    /// depends only on the inputs and seed.
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact equilibrium of a one-dimensional instance.
    #[command(name = "solve-1d")]
    Solve1d(Solve1dArgs),
    /// Grid search for a certified ε-equilibrium.
    Gba(GbaArgs),
    /// Batch of projected gradient ascent runs.
    Ascend(AscendArgs),
    /// Monotonicity probe of the reduced pseudo-gradient.
    Monotonicity(MonotonicityArgs),
    /// Monte-Carlo elections, binned by utility difference.
    #[command(name = "simulate-vote")]
    SimulateVote(VoteArgs),
    /// Largest gain from a unilateral grid deviation at a given profile.
    Certify(CertifyArgs),
}

#[derive(Debug, Args)]
pub struct Solve1dArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub qa: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub qb: f64,
    /// Allow |Q_A|, |Q_B| > 1 (|Q_A + Q_B| <= 2 is still required).
    #[arg(long)]
    pub relaxed: bool,
    /// Grid size for the deviation check.
    #[arg(long, default_value_t = 2001)]
    pub grid_points: usize,
}

/// Where a single instance comes from.
#[derive(Debug, Args)]
pub struct InstanceSource {
    /// JSON instance file, or `random`.
    #[arg(long)]
    pub instance: Option<String>,
    /// Voter CSV for party A (use with --voters-b).
    #[arg(long, requires = "voters_b")]
    pub voters_a: Option<PathBuf>,
    /// Voter CSV for party B (use with --voters-a).
    #[arg(long, requires = "voters_a")]
    pub voters_b: Option<PathBuf>,
    /// Dimension of a random instance.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Which instance of a multi-instance file to use.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Scale aggregates down when a norm exceeds 1 instead of rejecting.
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Args)]
pub struct GbaArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Linear-scan best responses instead of ternary search.
    #[arg(long)]
    pub exhaustive: bool,
    /// Grid size (at least the size required by epsilon).
    #[arg(long)]
    pub n: Option<usize>,
    /// Largest grid size allowed.
    #[arg(long, default_value_t = polcomp_core::grid::DEFAULT_N_CAP)]
    pub n_cap: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Vanilla,
    Extragradient,
}

#[derive(Debug, Args)]
pub struct AscendArgs {
    /// JSON instance file or `random:N`.
    #[arg(long, default_value = "random:20")]
    pub instances: String,
    /// Dimension of random instances.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub inits_per_instance: usize,
    #[arg(long, default_value_t = 0.75)]
    pub step_exponent: f64,
    /// Convergence radius.
    #[arg(long, default_value_t = 1e-4)]
    pub delta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Past iterates scanned for a repeat.
    #[arg(long, default_value_t = 50)]
    pub window: usize,
    #[arg(long, value_enum, default_value = "vanilla")]
    pub method: MethodArg,
    /// Grid spacing of the end-of-run certification.
    #[arg(long, default_value_t = 0.1)]
    pub certify_spacing: f64,
    /// Gain threshold for counting a run as an approximate equilibrium.
    #[arg(long, default_value_t = 0.05)]
    pub approx_epsilon: f64,
    /// Certify against deviations anywhere between Q_A and Q_B.
    #[arg(long)]
    pub full_span: bool,
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Args)]
pub struct MonotonicityArgs {
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.2)]
    pub norm_q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub norm_qa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub norm_qb: f64,
    #[arg(long, default_value_t = 100_000)]
    pub pairs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Hardmax,
    Linear,
    Softmax,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistributionArg {
    Uniform,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    #[arg(long, value_enum, default_value = "hardmax")]
    pub criterion: CriterionArg,
    #[arg(long, value_enum, default_value = "uniform")]
    pub distribution: DistributionArg,
    #[arg(long, default_value_t = 100)]
    pub voters: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.01)]
    pub xi: f64,
    /// Policy dimension.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = -0.005, allow_negative_numbers = true)]
    pub mu_lo: f64,
    #[arg(long, default_value_t = 0.005, allow_negative_numbers = true)]
    pub mu_hi: f64,
    /// Uniform half-width or Gaussian standard deviation of voter preferences.
    #[arg(long, default_value_t = 0.05)]
    pub spread: f64,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Fixed policy for A as comma-separated coordinates (with --z-b).
    #[arg(long, requires = "z_b", allow_hyphen_values = true)]
    pub z_a: Option<String>,
    #[arg(long, requires = "z_a", allow_hyphen_values = true)]
    pub z_b: Option<String>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    /// JSON file with `z_a` and `z_b` (e.g. a gba result).
    #[arg(long, conflicts_with_all = ["z_a", "z_b"])]
    pub profile: Option<PathBuf>,
    #[arg(long, requires = "z_b", allow_hyphen_values = true)]
    pub z_a: Option<String>,
    #[arg(long, requires = "z_a", allow_hyphen_values = true)]
    pub z_b: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    pub spacing: f64,
    #[arg(long)]
    pub full_span: bool,
}
