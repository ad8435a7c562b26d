use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Domain errors (regime violations, singular models) are kept distinct from
/// input errors so that callers such as the command-line front end can map
/// them to different exit statuses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("estimator applied outside its regime: {0}")]
    OutsideRegime(String),

    #[error("estimator undefined for this dataset: {0}")]
    UndefinedEstimator(String),

    #[error("model is singular: {0}")]
    SingularModel(String),

    #[error("information matrix is singular: {0}")]
    SingularInformation(String),

    #[error("bound undefined: {0}")]
    UndefinedBound(String),

    #[error("photon budget undefined: {0}")]
    UndefinedBudget(String),

    #[error("optimizer did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error("insufficient statistical power: {0}")]
    InsufficientPower(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("dataset has no reference spectrum attached")]
    MissingSpectrum,

    #[error("wrong detection mode: expected {expected}")]
    WrongMode { expected: &'static str },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier of the error variant, as printed by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidSpectrum(_) => "InvalidSpectrum",
            Error::OutsideRegime(_) => "OutsideRegime",
            Error::UndefinedEstimator(_) => "UndefinedEstimator",
            Error::SingularModel(_) => "SingularModel",
            Error::SingularInformation(_) => "SingularInformation",
            Error::UndefinedBound(_) => "UndefinedBound",
            Error::UndefinedBudget(_) => "UndefinedBudget",
            Error::NotConverged { .. } => "NotConverged",
            Error::Degenerate(_) => "Degenerate",
            Error::InsufficientPower(_) => "InsufficientPower",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::MissingSpectrum => "MissingSpectrum",
            Error::WrongMode { .. } => "WrongMode",
            Error::Parse { .. } => "Parse",
            Error::Io { .. } => "Io",
            Error::Json(_) => "Json",
        }
    }

    /// True for errors caused by malformed input or configuration rather than
    /// by the physics of the request.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidSpectrum(_)
                | Error::ConfigInvalid(_)
                | Error::MissingSpectrum
                | Error::WrongMode { .. }
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::Json(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
