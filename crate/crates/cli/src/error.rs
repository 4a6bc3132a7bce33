use std::fmt;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or ranges (exit 2).
    Usage(String),
    /// Solver or model failure (exit 3).
    Physics(String),
    /// Stale calibration, tampered or inconsistent metadata (exit 4).
    Integrity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Integrity(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Physics(m) => write!(f, "physics error: {m}"),
            CliError::Integrity(m) => write!(f, "integrity error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<virtlase_core::Error> for CliError {
    fn from(e: virtlase_core::Error) -> Self {
        use virtlase_core::Error as E;
        match e {
            E::Parameter(_) | E::EmptyStream | E::Unsorted(_) | E::Io(_) => CliError::Usage(e.to_string()),
            E::Format(_) => CliError::Integrity(e.to_string()),
            _ => CliError::Physics(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}
