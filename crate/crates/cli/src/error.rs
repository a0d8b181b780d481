use iongrad::Error as CoreError;
use thiserror::Error;

/// Failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("threshold breach: {0}")]
    Threshold(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Threshold(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    /// Prefix the message with where it happened, keeping the class.
    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
            CliError::Threshold(m) => CliError::Threshold(format!("{what}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{what}: {m}")),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        let msg = e.to_string();
        let msg = msg
            .strip_prefix("config error at ")
            .map_or(msg.clone(), |m| format!("at {m}"));
        match e {
            StepUnderflow { .. }
            | NormDrift { .. }
            | TruncationOverflow { .. }
            | TruncationInsufficient(_)
            | NoRoot(_)
            | Pole(_)
            | NonConvergence(_)
            | Degenerate(_) => CliError::Numerical(msg),
            Io(_) => CliError::Io(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
