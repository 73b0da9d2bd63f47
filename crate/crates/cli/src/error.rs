use std::path::PathBuf;

use flowid_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const CONVERGENCE: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Parse(String),

    #[error("configuration field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    /// The identification finished without meeting its tolerance.
    #[error("identification did not converge (best total error {total_error:.3e})")]
    NotConverged { total_error: f64 },

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation { .. } => exit::VALIDATION,
            CliError::Core(e) => core_exit_code(e),
            CliError::NotConverged { .. } => exit::CONVERGENCE,
            CliError::Io { .. } | CliError::Internal(_) => exit::INTERNAL,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::InvalidInput(_) | CoreError::Topology(_) => exit::VALIDATION,
        CoreError::Evaluation { source, .. } => core_exit_code(source),
        CoreError::Contact { .. }
        | CoreError::FilmDiverged { .. }
        | CoreError::NoEquilibrium { .. }
        | CoreError::IntegrationDiverged { .. }
        | CoreError::RatioOverflow { .. } => exit::CONVERGENCE,
        CoreError::Coefficients(_) | CoreError::InsufficientData(_) | CoreError::Singular(_) => {
            exit::INTERNAL
        }
    }
}
