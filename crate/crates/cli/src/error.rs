use std::fmt;
use std::process::ExitCode;

use hyperop::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or values; exit 2.
    Usage(String),
    /// Argument outside a function's domain or range; exit 2.
    Domain(String),
    /// Build, I/O or numerical failure; exit 1.
    Infra(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Infra(_) => 1,
            CliError::Usage(_) | CliError::Domain(_) => 2,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        CliError::Infra(format!("{what}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Infra(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_domain() || matches!(e, Error::BelowWindow { .. }) {
            CliError::Domain(e.to_string())
        } else if e.is_overflow() {
            CliError::Domain(format!("{e} (try --guarded)"))
        } else if matches!(e, Error::InvalidArgument(_) | Error::OrderTooLarge(_) | Error::MissingLevel(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Infra(e.to_string())
        }
    }
}
