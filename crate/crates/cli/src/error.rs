use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid configuration. Exit code 1.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical routine failed. Exit code 2.
    #[error("solver failure: {0}")]
    Solver(cuspforge::Error),

    /// Output could not be written. Exit code 1.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Solver(_) => 2,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Self::Config(m) => m.clone(),
            Self::Solver(e) => e.to_string(),
            Self::Io(e) => e.to_string(),
        }
    }
}

impl From<cuspforge::Error> for CliError {
    fn from(e: cuspforge::Error) -> Self {
        use cuspforge::Error as E;
        match e {
            E::UnknownFamily(_) | E::InvalidParams(_) | E::PreconditionViolated(_) => Self::Config(e.to_string()),
            other => Self::Solver(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Self::Io(io),
            other => Self::Config(format!("csv: {other:?}")),
        }
    }
}
