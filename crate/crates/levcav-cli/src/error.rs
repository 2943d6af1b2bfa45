//! CLI error taxonomy mapped to exit codes: 2 for configuration/input
//! problems, 3 for numerical failures. A machine-readable JSON line goes to
//! stderr either way.

use serde::Serialize;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, schema violation, missing/colliding files. Exit 2.
    Config(String),
    /// A computation failed (instability, non-convergence, divergence). Exit 3.
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn numerical(err: impl std::fmt::Display) -> Self {
        CliError::Numerical(err.to_string())
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Config(format!("{context}: {err}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: &'a str,
}

/// Emit the error as one JSON object on stderr.
pub fn report_to_stderr(err: &CliError) {
    let (kind, message) = match err {
        CliError::Config(m) => ("config", m.as_str()),
        CliError::Numerical(m) => ("numerical", m.as_str()),
    };
    let report = ErrorReport { error: kind, message };
    eprintln!("{}", serde_json::to_string(&report).unwrap());
}
