use thiserror::Error;

/// Failures of a CLI run, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Precondition(_) => "precondition",
            CliError::NonConvergence(_) => "non_convergence",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Precondition(m) | CliError::NonConvergence(m) | CliError::Io(m) => m.clone(),
        }
    }
}

impl From<beltrami::Error> for CliError {
    fn from(e: beltrami::Error) -> Self {
        if e.is_convergence_failure() {
            CliError::NonConvergence(e.to_string())
        } else {
            CliError::Precondition(e.to_string())
        }
    }
}
