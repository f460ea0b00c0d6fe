use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 2")]
    InvalidGrid(usize),
    #[error("frequency {n} does not fit a grid of size {grid} (allowed range ({lo}, {hi}])", lo = -(*.grid as i64) / 2, hi = *.grid as i64 / 2)]
    FrequencyOverflow { n: i64, grid: usize },
    #[error("exponent p = {0} must be at least 1")]
    BadExponent(f64),
    #[error("grid mismatch: {left} vs {right} samples")]
    GridMismatch { left: usize, right: usize },
    #[error("grid of size {grid} is too coarse, need at least {required}")]
    GridTooCoarse { grid: usize, required: u128 },
    #[error("invalid radii: {0}")]
    InvalidRadii(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("truncation index N = {0} is too large")]
    TruncationTooLarge(usize),
    #[error("BlocksNotFound: only {found} of {wanted} blocks exist below index {k_max}")]
    BlocksNotFound { found: usize, wanted: usize, k_max: usize },
    #[error("RangeTooWide: product range [{m}, {n}] is too wide to expand")]
    RangeTooWide { m: usize, n: usize },
    #[error("SeparationViolated: lowest frequency 2^{log2_lowest} does not exceed 10 r_{top} = 2^{log2_bound:.4}")]
    SeparationViolated { log2_lowest: usize, top: usize, log2_bound: f64 },
    #[error("invalid product: {0}")]
    InvalidProduct(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("Diverged: {0}")]
    Diverged(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 input, 3 mathematical precondition, 4 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SeparationViolated { .. }
            | Error::BlocksNotFound { .. }
            | Error::RangeTooWide { .. } => 3,
            Error::Diverged(_) => 4,
            _ => 2,
        }
    }
}
