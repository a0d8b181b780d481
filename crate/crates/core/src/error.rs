use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for {what} (count {count})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("coupling beyond critical point: zeta^2 = {zeta_sq} for the {mode} mode")]
    SupercriticalCoupling { mode: &'static str, zeta_sq: f64 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("step size underflow at t = {t}: step {step} below minimum {min_step}")]
    StepUnderflow { t: f64, step: f64, min_step: f64 },

    #[error("norm drift {drift:e} exceeds limit {limit:e} at t = {t}")]
    NormDrift { t: f64, drift: f64, limit: f64 },

    #[error(
        "truncation overflow at t = {t}: mode {mode} holds population {population:e} in its top two Fock levels"
    )]
    TruncationOverflow {
        t: f64,
        mode: usize,
        population: f64,
    },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("pole of the special function at {0}")]
    Pole(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
