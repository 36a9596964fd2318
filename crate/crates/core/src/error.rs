use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("non-numeric cell at row {row}, column {column} ({name}): {value:?}")]
    NonNumericCell {
        row: usize,
        column: usize,
        name: String,
        value: String,
    },

    #[error("infeasible problem: n*C = {nc} < 1 (outlier fraction too large)")]
    Infeasible { nc: f64 },

    #[error(
        "solver did not converge after {iterations} iterations \
         (max KKT violation {violation:.3e}, objective {objective:.9})"
    )]
    NotConverged {
        iterations: usize,
        violation: f64,
        objective: f64,
    },

    #[error("solver failed at s = {s}: {source}")]
    AtBandwidth {
        s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("failed at sample size {n}{}: {source}", s.map(|s| format!(", s = {s}")).unwrap_or_default())]
    AtSampleSize {
        n: usize,
        s: Option<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("grid spacing is not uniform")]
    NonUniformGrid,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("x = {x} is outside the fitted range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("no interior local maximum on the grid; widen the s range (--s-max)")]
    NoInteriorMaximum,

    #[error("confidence band never contains zero on the grid; widen the s range (--s-max)")]
    NoZeroCrossing,

    #[error("model format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn at_bandwidth(self, s: f64) -> Self {
        Error::AtBandwidth {
            s,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_sample_size(self, n: usize, s: Option<f64>) -> Self {
        Error::AtSampleSize {
            n,
            s,
            source: Box::new(self),
        }
    }

    /// Stable short tag, used by the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidBandwidth(_) => "invalid_bandwidth",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::NonNumericCell { .. } => "non_numeric_cell",
            Error::Infeasible { .. } => "infeasible",
            Error::NotConverged { .. } => "not_converged",
            Error::AtBandwidth { source, .. } | Error::AtSampleSize { source, .. } => source.kind(),
            Error::NonUniformGrid => "non_uniform_grid",
            Error::Singular(_) => "singular",
            Error::OutOfRange { .. } => "out_of_range",
            Error::NoInteriorMaximum => "no_interior_maximum",
            Error::NoZeroCrossing => "no_zero_crossing",
            Error::Format(_) => "format",
        }
    }
}
