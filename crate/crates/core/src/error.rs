use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("weights sum to {sum}, expected exactly 1")]
    SumNotOne { sum: String },

    #[error("weight matrix has shape {rows}x{cols}, expected {m}x{n}")]
    BadShape {
        rows: usize,
        cols: usize,
        m: usize,
        n: usize,
    },

    #[error("alphabet sizes must satisfy 2 <= m < n (got m={m}, n={n})")]
    OrderViolation { m: usize, n: usize },

    #[error("negative weight {value} at ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, value: String },

    #[error("digit {digit} out of range for alphabet of size {size}")]
    DigitOutOfRange { digit: u8, size: usize },

    #[error("fiber mass needs |i| >= |j| (got |i|={i_len}, |j|={j_len})")]
    DepthMismatch { i_len: usize, j_len: usize },

    #[error("cylinder has zero mass")]
    ZeroMassCylinder,

    #[error("word too short: need {needed} letters, have {available}")]
    InsufficientDepth { needed: usize, available: usize },

    #[error("cylinder of generation {requested} exceeds stored generation {generation}")]
    GenerationExceeded { requested: usize, generation: usize },

    #[error("{bits}-bit precision cannot resolve the rotation at step {step}")]
    PrecisionExhausted { bits: usize, step: u64 },

    #[error("rotation counter mismatch at step {step}: floor gives {floor}, hit count gives {hits}")]
    CounterMismatch { step: u64, floor: u64, hits: u64 },

    #[error("measures are defined over different alphabets or specs")]
    IncompatibleSpecs,

    #[error("measure is not of the form Psi(w) or Psi_k(w)")]
    NotPsiForm,

    #[error("scale {r} is not above the measure resolution {resolution}")]
    ResolutionTooCoarse { r: f64, resolution: f64 },

    #[error("work of size {needed} exceeds budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),

    #[error("degenerate scale range: {0}")]
    DegenerateRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("identity checks failed: {0}")]
    IdentityViolations(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Budget and precision failures map to a distinct process exit code.
    pub fn is_resource_failure(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. } | Error::PrecisionExhausted { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
