use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Clone, Parser)]
#[command(name = "lacunary", version, about = "Sparse lacunary spectrum experiments on the torus")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Radii table: `{"log2_r": [...]}` or `{"r": [...]}`.
    #[arg(long, global = true, conflicts_with = "radii_gen")]
    pub radii_file: Option<PathBuf>,
    /// Radii generator, `affine-log:SLOPE,OFFSET` or `step:START,SHIFT,FLOOR`.
    #[arg(long, global = true)]
    pub radii_gen: Option<String>,
    /// Weights table: `{"w": [...]}`.
    #[arg(long, global = true, conflicts_with = "weights_gen")]
    pub weights_file: Option<PathBuf>,
    /// Weights generator, `constant:VALUE` or `power:SCALE,EXPONENT`.
    #[arg(long, global = true)]
    pub weights_gen: Option<String>,
    /// Truncation index.
    #[arg(short = 'N', global = true)]
    pub n: Option<usize>,
    /// Grid size (power of two).
    #[arg(short = 'G', global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Primary output file (the solution for `synthesize`, the report otherwise).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report file; defaults to stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// CSV dump of bulk data.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON object mapping check names to tolerances.
    #[arg(long, global = true)]
    pub tol_overrides: Option<PathBuf>,
    /// Length of generated radii and weights sequences.
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// Omit wall-clock timings from the report.
    #[arg(long, global = true)]
    pub no_timings: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Boundedness functional B_N, growth test and λ sequence.
    CheckCondition,
    /// Small sup-norm extension of prescribed coefficients.
    Synthesize(SynthesizeArgs),
    /// Riesz product lower bounds.
    Certify(CertifyArgs),
    /// Block plan and counterexample sequence.
    Counterexample(CounterexampleArgs),
    /// Bump, kernel and inequality checks for the multiplier.
    VerifyMultiplier(VerifyArgs),
    /// Ratio of sup-norm to weighted energy over random pinned data.
    ScalingStudy(ScalingArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Comma-separated increasing even exponents.
    #[arg(long, value_delimiter = ',')]
    pub p_schedule: Option<Vec<u32>>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    /// Coefficients `{"a": [...]}`, entries real or `[re, im]`.
    #[arg(long)]
    pub coeffs: PathBuf,
    /// CSV of `(x, Re f, Im f, |f|)` on the refined grid.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// Coefficients `{"a": [...]}`; without them the counterexample is certified.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
    /// Certificate window `M:N` (repeatable).
    #[arg(long = "window")]
    pub windows: Vec<String>,
    /// Last counterexample block when no coefficients are given.
    #[arg(long, default_value_t = 3)]
    pub s_max: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 3)]
    pub s_max: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Size of the seeded measure family.
    #[arg(long, default_value_t = 200)]
    pub family_size: usize,
    /// Smoothing radii for the R bound fit.
    #[arg(long, value_delimiter = ',', default_value = "8,32,128")]
    pub r_values: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub lacunary_trials: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}
