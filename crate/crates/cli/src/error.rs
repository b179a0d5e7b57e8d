use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config {origin}: {message}")]
    Config { origin: String, message: String },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("sweep finished with {failed} of {total} jobs failed")]
    PartialFailure { failed: usize, total: usize },

    #[error(transparent)]
    Core(#[from] vnotch_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for convergence failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::NotConverged(_) | CliError::PartialFailure { .. } => 3,
            CliError::Core(vnotch_core::Error::NonConvergence { .. }) => 3,
            CliError::Core(vnotch_core::Error::ParameterDomain(_)) => 2,
            _ => 1,
        }
    }

    /// Short machine-readable category used in logs.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::NotConverged(_) => "not_converged",
            CliError::PartialFailure { .. } => "partial_failure",
            CliError::Core(vnotch_core::Error::NonConvergence { .. }) => "not_converged",
            CliError::Core(vnotch_core::Error::LinearSolver { .. }) => "linear_solver",
            CliError::Core(vnotch_core::Error::ParameterDomain(_)) => "parameter",
            CliError::Core(vnotch_core::Error::Mesh(_)) => "mesh",
            CliError::Core(_) => "core",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }
}

pub(crate) fn config_err(origin: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        origin: origin.into(),
        message: message.into(),
    }
}
