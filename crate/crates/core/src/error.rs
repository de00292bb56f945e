use thiserror::Error;

/// Errors raised by the waveform design library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("angle {0} rad is outside [-pi/2, pi/2]")]
    AngleOutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("density is zero at {0} rad")]
    ZeroDensity(f64),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("waveform radiates no energy into prior support")]
    NoEnergyInSupport,

    #[error("target matrix is zero; no finite-power solution")]
    ZeroTarget,

    #[error("empty constraint grid: {0}")]
    EmptyGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(expected: impl ToString, actual: impl ToString) -> Error {
    Error::Dimension {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
