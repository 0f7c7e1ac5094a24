//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset ingestion, estimation, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A named column is missing or an algorithm name is unknown.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell could not be parsed (row indices are zero-based data rows,
    /// excluding the header).
    #[error("parse error at row {row}{}: {message}", column.as_deref().map(|c| format!(", column '{c}'")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<String>,
        message: String,
    },

    /// The activity vector is all-active or all-inactive.
    #[error("degenerate classes: {0}")]
    DegenerateClasses(String),

    /// An argument is outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A variance or covariance could not be assembled into a usable
    /// standard error (e.g. zero SE with a nonzero difference).
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// I/O failure while reading or writing files.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV-level failure not attributable to a single cell.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
