use std::fmt;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(jsattr::Error),
    /// Input problems found by the CLI itself.
    Invalid(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(e) if e.stage() == Some("persist") => 3,
            CliError::Data(_) | CliError::Invalid(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Data(e) => match (e.stage(), e) {
                (Some(stage), jsattr::Error::Stage { source, .. }) => write!(f, "stage `{stage}` failed: {source}"),
                _ => write!(f, "data: {e}"),
            },
            CliError::Invalid(m) => write!(f, "data: {m}"),
            CliError::Internal(m) => write!(f, "internal: {m}"),
        }
    }
}

impl From<jsattr::Error> for CliError {
    fn from(e: jsattr::Error) -> CliError {
        CliError::Data(e)
    }
}
