use std::path::PathBuf;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("invalid `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("warp a(t) = {value} is not positive at t = {t}")]
    NonPositiveWarp { t: f64, value: f64 },

    #[error("negative discriminant {value}: {reason}")]
    NegativeDiscriminant { value: f64, reason: String },

    #[error("model is not certified for the requested hypothesis: {0}")]
    Uncertified(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation { .. } | Self::Config { .. } => 1,
            Self::Expr(ExprError::Domain { .. }) => 2,
            Self::Expr(_) => 1,
            Self::NonPositiveWarp { .. }
            | Self::NegativeDiscriminant { .. }
            | Self::Uncertified(_)
            | Self::Numerical(_) => 2,
            Self::Io { .. } => 3,
        }
    }
}
