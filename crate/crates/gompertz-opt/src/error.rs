use std::path::PathBuf;

use gompertz_core::Error;

/// Configuration, input or IO problem.
pub const EXIT_CONFIG: i32 = 1;
/// A parameter or well-posedness condition failed.
pub const EXIT_VALIDATION: i32 = 2;
/// A solver, integrator or search did not converge.
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}:{line}: {msg}", path.display())]
    Config { path: PathBuf, line: usize, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Data { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Model(#[from] Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config { .. } | AppError::Usage(_) | AppError::Io { .. } | AppError::Data { .. } => EXIT_CONFIG,
            AppError::Model(e) => match e {
                Error::Quadrature { .. }
                | Error::IncompleteGamma { .. }
                | Error::BracketBreach { .. }
                | Error::Integration { .. }
                | Error::Convergence { .. } => EXIT_CONVERGENCE,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
