use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit codes used by the command-line front end.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const PHYSICS: i32 = 2;
    pub const IO: i32 = 3;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(
        "ladder truncation violated: population {population:.3e} at order {order} exceeds {threshold:.1e}"
    )]
    Truncation {
        order: i32,
        population: f64,
        threshold: f64,
    },

    #[error("norm drift {drift:.3e} exceeds tolerance {tol:.1e}")]
    NormDrift { drift: f64, tol: f64 },

    #[error("Bragg regime violated: chi*n/w_rec = {ratio:.4}")]
    RegimeViolated { ratio: f64 },

    #[error("measurement outcome has zero probability")]
    ZeroProbability,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Config { .. }
            | Error::UnknownKey(_)
            | Error::UnknownPreset(_) => exit_code::USAGE,
            Error::Truncation { .. }
            | Error::NormDrift { .. }
            | Error::RegimeViolated { .. }
            | Error::ZeroProbability
            | Error::DimensionMismatch { .. }
            | Error::InvalidDensity(_) => exit_code::PHYSICS,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => exit_code::IO,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
