//! Process-level error taxonomy. Every failure funnels into one of three
//! exit classes: bad configuration, failed computation, or filesystem
//! trouble.

use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Invalid or inconsistent configuration (exit code 2).
    Config(String),
    /// A computation or fit failed beyond what the run tolerates (exit 3).
    Compute(String),
    /// Filesystem or encoding trouble, always naming the path (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Compute(msg) => write!(f, "compute error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

/// Map a library error raised during computation. Everything that is not
/// I/O counts as a compute failure; config problems are caught up front by
/// validation and never reach this path.
pub fn from_core(err: anderson_qed::Error) -> CliError {
    match err {
        anderson_qed::Error::Io(e) => CliError::Io(e),
        other => CliError::Compute(other.to_string()),
    }
}

pub fn io_at(path: &Path, err: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}
