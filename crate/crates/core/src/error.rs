use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments or an invalid option combination.
    Usage,
    /// Unreadable, malformed or inconsistent input data.
    Data,
    /// A numerical precondition failed (indefinite Gram, zero variance, ...).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains a non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {deviation:e}")]
    NonSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("all eigenvalues are zero; there is no variance to capture")]
    AllZeroVariance,

    #[error(
        "kernel Gram matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e} \
         below -{tolerance:e} * {max_eigenvalue:e}"
    )]
    NotPositiveSemidefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        tolerance: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset specification: {0}")]
    BadSpec(String),

    #[error("{path}: line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumericCell {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: images have mixed dimensions ({expected_width}x{expected_height} vs {width}x{height})")]
    MixedDimensions {
        path: PathBuf,
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("{path}: not a PGM file (magic {magic:?})")]
    BadMagicNumber { path: PathBuf, magic: String },

    #[error("{path}: malformed PGM: {reason}")]
    MalformedImage { path: PathBuf, reason: String },

    #[error("unsupported model format version {found} (expected {expected})")]
    SchemaVersionMismatch { found: String, expected: u32 },

    #[error("corrupt model field `{field}`: {reason}")]
    CorruptField { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonSymmetric { .. }
            | Error::AllZeroVariance
            | Error::NotPositiveSemidefinite { .. } => ErrorClass::Numerical,
            Error::InvalidArgument(_) | Error::BadSpec(_) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}
