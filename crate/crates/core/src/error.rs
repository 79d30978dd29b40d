use thiserror::Error;

use crate::logic::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("vector is not normalized (norm deviation {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("polar angle {0} outside [0, pi]")]
    InvalidPolarAngle(f64),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("labels must be pairwise distinct (min gap {gap:e} < {required:e})")]
    LabelGap { gap: f64, required: f64 },

    #[error("degenerate spectrum: eigenvalue gap {gap:e}")]
    DegenerateSpectrum { gap: f64 },

    #[error("probability {value:e} at cell ({row}, {col}) is negative beyond rounding noise")]
    NegativeProbability { row: usize, col: usize, value: f64 },

    #[error("imaginary residual {0:e} exceeds tolerance")]
    ImaginaryResidual(f64),

    #[error("shots must be positive")]
    ZeroShots,

    #[error("unknown tolerance key `{0}`")]
    UnknownTolerance(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
