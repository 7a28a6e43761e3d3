use thiserror::Error;

/// Failures of a subcommand, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("unsupported verification: {0}")]
    Unsupported(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Unsupported(_) => 3,
        }
    }
}

impl From<composite_resolvent::Error> for CliError {
    fn from(e: composite_resolvent::Error) -> Self {
        use composite_resolvent::Error as E;
        match e {
            E::Unsupported(_) => CliError::Unsupported(e.to_string()),
            E::NoConvergence(_) => CliError::NonConvergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
