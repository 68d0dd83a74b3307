use std::fmt;

use phase_hpss::Error;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or inconsistent inputs (exit 1).
    Usage(String),
    /// Reading or writing files failed (exit 2).
    Io(String),
    /// The solver produced non-finite iterates (exit 3).
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Diverged(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Diverged(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io { .. }
            | Error::Wav { .. }
            | Error::UnsupportedFormat(_)
            | Error::EmptySignal
            | Error::NonFiniteSample(_)
            | Error::Format(_) => CliError::Io(msg),
            Error::Diverged { .. } | Error::ConstraintViolated { .. } => CliError::Diverged(msg),
            Error::InvalidParameter { .. } | Error::ShapeMismatch { .. } | Error::Config(_) => {
                CliError::Usage(msg)
            }
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = Result<T, CliError>;
