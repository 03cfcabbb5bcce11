use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {bad_row} has {cols} columns")]
    NotSquare {
        rows: usize,
        bad_row: usize,
        cols: usize,
    },

    #[error("matrix is empty")]
    Empty,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, outside tolerance {tol} of 1")]
    RowSumViolation { row: usize, sum: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{count} recurrent classes: stationary distribution is not unique")]
    MultipleRecurrentClasses { count: usize },

    #[error("recurrent class has period {period}")]
    PeriodicRecurrentClass { period: usize },

    #[error("matrix is not irreducible (strict mode)")]
    NotIrreducible,

    #[error("stationary solve failed: residual {residual:e}")]
    StationarySolve { residual: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("bad breakpoints: {0}")]
    BadBreakpoints(String),

    #[error("s = {s} outside [0, 1]")]
    OutOfRange { s: f64 },

    #[error("rank warning{}: sigma_n = {sigma_min:e}, sigma_(n-1) = {sigma_next:e}, zero threshold {threshold:e}", at_suffix(.at))]
    RankWarning {
        at: Option<f64>,
        sigma_min: f64,
        sigma_next: f64,
        threshold: f64,
    },

    #[error("no T <= {cap} satisfies the criterion{}", at_suffix(.at))]
    CapExceeded { cap: u64, at: Option<f64> },

    #[error("eps = {eps} violates 0 < eps < {limit}")]
    EpsOutOfRange { eps: f64, limit: f64 },

    #[error("argument `{name}` must be positive, got {value}")]
    NonpositiveArgument { name: &'static str, value: f64 },

    #[error("dimension n = 1 is degenerate for this analysis")]
    DegenerateDimension,

    #[error("structural hypotheses fail: {0}")]
    Hypotheses(String),
}

fn at_suffix(at: &Option<f64>) -> String {
    match at {
        Some(s) => format!(" at s = {s}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
