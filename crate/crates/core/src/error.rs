use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column {0} has (near) zero norm")]
    ZeroColumn(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("test observation is orthogonal to every training column")]
    OrthogonalInput,
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("no classes given")]
    EmptyClassSet,
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("requested dimension {requested} exceeds the maximum {max}")]
    DimensionTooLarge { requested: usize, max: usize },
    #[error("dimension too small: {0}")]
    DimensionTooSmall(String),
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("pooled covariance is singular")]
    SingularCovariance,
    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("row on line {line} has {found} fields, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("label count mismatch: {labels} labels for {observations} observations")]
    LabelCountMismatch { labels: usize, observations: usize },
    #[error("class {class} has {count} observation(s); at least 2 are required to split")]
    ClassTooSmall { class: usize, count: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse grouping used to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::InvalidConfig(_) => ErrorKind::Usage,
            Error::OrthogonalInput
            | Error::NumericalBreakdown(_)
            | Error::SingularCovariance => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
