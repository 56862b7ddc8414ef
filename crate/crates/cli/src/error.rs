use thiserror::Error;

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] beltrami_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Exit code for every hard check passing.
pub const EXIT_PASS: i32 = 0;
/// Exit code for a failed hard check or a runtime failure.
pub const EXIT_INVARIANT: i32 = 1;
/// Exit code for an invalid config or command line.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code when a solve did not converge.
pub const EXIT_NONCONVERGENCE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            _ => EXIT_INVARIANT,
        }
    }
}
