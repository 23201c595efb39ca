use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular Jacobian (condition estimate {cond:.3e})")]
    SingularJacobian { cond: f64 },

    #[error("rank-deficient slice: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("composition produced the zero form (degenerate image)")]
    DegenerateImage,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("path count {paths} exceeds budget {budget}")]
    BudgetExceeded { paths: u64, budget: u64 },

    #[error("count {count} is not divisible by stabilizer order {stabilizer}")]
    NotDivisible { count: u64, stabilizer: u64 },

    #[error("start pair construction failed after {attempts} attempts")]
    StartPairFailed { attempts: u32 },

    #[error("path failure rate {failed}/{tracked} in one loop exceeds the systemic limit")]
    ExcessiveFailures { failed: usize, tracked: usize },

    #[error("trace path failure: solution {index} did not track to t={t}")]
    TracePathFailure { index: usize, t: C64Display },

    #[error("trace chart denominator below threshold after {retries} chart redraws")]
    ChartDegenerate { retries: u32 },

    #[error("Newton refinement did not converge within {iters} iterations (last step {last_beta:.3e})")]
    RefineDiverged { iters: u32, last_beta: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("artifact schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Complex number wrapper so error messages can carry a t-value.
#[derive(Debug, Clone, Copy)]
pub struct C64Display(pub crate::scalar::C64);

impl std::fmt::Display for C64Display {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}
