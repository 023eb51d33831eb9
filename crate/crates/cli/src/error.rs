use thiserror::Error;

/// Failure of a run, mapped to the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration, including chains
    /// that fail the non-absorption check.
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    /// The run completed but a check exceeded its threshold.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Verification(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl From<betachain::Error> for CliError {
    fn from(e: betachain::Error) -> Self {
        use betachain::Error as E;
        match e {
            E::Domain(_) | E::Ergodicity(_) | E::Unsupported(_) => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}
