use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the supported budget of {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("function is not finite at superoperator eigenvalue {eigenvalue}")]
    Domain { eigenvalue: Complex64 },

    #[error("post-selection probability {probability:.3e} is below the 1e-12 floor")]
    PostSelectionImpossible { probability: f64 },

    #[error("detector grid truncates the state: boundary density {density:.3e}")]
    GridTruncation { density: f64 },

    #[error("translated wavepacket wraps around the grid: boundary density {density:.3e}")]
    Wraparound { density: f64 },

    #[error("position {position} lies outside the detector grid")]
    OutOfGrid { position: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("tolerance exceeded: {0}")]
    Tolerance(String),
}

impl Error {
    /// Attaches the offending path to an I/O error.
    pub(crate) fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 4,
            Error::PostSelectionImpossible { .. }
            | Error::GridTruncation { .. }
            | Error::Wraparound { .. }
            | Error::Domain { .. }
            | Error::Tolerance(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
