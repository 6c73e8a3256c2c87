use std::fmt;

use fragility::ErrorCategory;

/// Failures surfaced by the command line, each mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration.
    Config(String),
    Engine(fragility::Error),
    /// Report or CSV files could not be written.
    Output(String),
}

impl CliError {
    /// 2 config/input, 3 numerical, 4 undefined measure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Engine(e) => match e.category() {
                ErrorCategory::Input => 2,
                ErrorCategory::Numerical => 3,
                ErrorCategory::Undefined => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Engine(e) => write!(f, "{e}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fragility::Error> for CliError {
    fn from(e: fragility::Error) -> Self {
        CliError::Engine(e)
    }
}
