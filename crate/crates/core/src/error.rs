use thiserror::Error;

/// Broad failure classes. The command-line front end maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Numerical,
    Singular,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected}, found {found}")]
    DimensionMismatch { op: &'static str, expected: String, found: String },

    #[error("{op}: matrix must be square, got {rows}x{cols}")]
    NotSquare { op: &'static str, rows: usize, cols: usize },

    #[error("{0}: non-finite entry")]
    NonFinite(&'static str),

    #[error("{op}: problem size {size} exceeds the limit of {limit}")]
    TooLarge { op: &'static str, size: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown scheme '{name}', valid names: leapfrog, lax, lax-wendroff, crank-nicolson, custom")]
    UnknownScheme { name: String },

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("no known value for node (i={i}, n={n})")]
    MissingNode { i: usize, n: usize },

    #[error("{0}")]
    Usage(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{op}: no convergence after {iterations} iterations")]
    NoConvergence { op: &'static str, iterations: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Singular(_) => ErrorKind::Singular,
            Error::NoConvergence { .. } | Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Usage,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
