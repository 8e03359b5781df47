use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad grouping used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Unreadable, malformed or inconsistent input data.
    Data,
    /// The model cannot be fitted or a parameter is invalid.
    Model,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` has zero variance")]
    ConstantColumn(String),

    #[error("at least 4 rows are required, got {0}")]
    TooFewRows(usize),

    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },

    #[error("row count mismatch: {left} vs {right}")]
    RowCountMismatch { left: usize, right: usize },

    #[error("column names count {names} does not match column count {cols}")]
    ColumnNameMismatch { names: usize, cols: usize },

    #[error("threshold epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),

    #[error("tuning parameter lambda must lie in [0.5, 1], got {0}")]
    LambdaOutOfRange(f64),

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reference edge rate pi = {0} is degenerate (must be strictly between 0 and 1)")]
    DegenerateReference(f64),

    #[error("no tuning candidate produced a usable biclique set")]
    NoValidCandidate,

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("canonical correlation denominator vanished")]
    ZeroDenominator,

    #[error("index universe mismatch: truth is {truth_p}x{truth_q}, estimate is {est_p}x{est_q}")]
    UniverseMismatch {
        truth_p: usize,
        truth_q: usize,
        est_p: usize,
        est_q: usize,
    },

    #[error("instance {p}x{q} exceeds the exhaustive search limit of {limit}")]
    InstanceTooLarge { p: usize, q: usize, limit: usize },

    #[error("failed to parse `{value}` at line {line}, column {column}")]
    Parse {
        line: usize,
        column: usize,
        value: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ConstantColumn(_)
            | Error::TooFewRows(_)
            | Error::NonFinite { .. }
            | Error::RowCountMismatch { .. }
            | Error::ColumnNameMismatch { .. }
            | Error::Parse { .. }
            | Error::Csv(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::Data,
            _ => ErrorClass::Model,
        }
    }
}
