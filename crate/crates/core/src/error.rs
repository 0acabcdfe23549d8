use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the CLI exit-code classes: `Parse`, `Validation`,
/// `Io` and `SizeMismatch` are data errors, the rest are numeric or
/// feasibility errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("objective undefined: {0}")]
    UndefinedObjective(String),

    #[error("infeasible state: {0}")]
    Infeasible(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::SizeMismatch(_) => "size-mismatch",
            Error::UndefinedObjective(_) => "undefined-objective",
            Error::Infeasible(_) => "infeasible",
            Error::Numeric(_) => "numeric",
            Error::NotFound(_) => "not-found",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::SizeMismatch(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
