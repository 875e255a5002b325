use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Parse,
    Validation,
    Numerical,
    Io,
}

impl ErrorClass {
    /// Process exit code for this class. `0` is reserved for success.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 1,
            ErrorClass::Usage => 2,
            ErrorClass::Parse => 3,
            ErrorClass::Validation => 4,
            ErrorClass::Numerical => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate graph: {0} node(s), at least 2 required")]
    DegenerateGraph(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid noise setting: {0}")]
    InvalidNoise(String),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("series too short: {actual} samples, need at least {required}")]
    SeriesTooShort { required: usize, actual: usize },

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no valid snapshot files in {}", .0.display())]
    NoValidFiles(PathBuf),

    #[error("feature error: {0}")]
    Feature(String),

    #[error("zero variance in channel {0}")]
    ZeroVariance(usize),

    #[error("timestamps not strictly increasing at index {0}")]
    UnorderedTimestamps(usize),

    #[error("simulation spec failed validation: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("grid point (q={q}, r={r}) failed: {source}")]
    GridPoint {
        q: f64,
        r: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. } | Error::NoValidFiles(_) | Error::UnorderedTimestamps(_) => {
                ErrorClass::Parse
            }
            Error::Validation(_) => ErrorClass::Validation,
            Error::Singular(_) | Error::ZeroVariance(_) | Error::Feature(_) => {
                ErrorClass::Numerical
            }
            Error::Io { .. } => ErrorClass::Io,
            Error::GridPoint { source, .. } => source.class(),
            Error::DegenerateGraph(_)
            | Error::InvalidGraph(_)
            | Error::DimensionMismatch { .. }
            | Error::InvariantViolation(_)
            | Error::InvalidNoise(_)
            | Error::IndexOutOfRange { .. }
            | Error::SeriesTooShort { .. }
            | Error::Config(_) => ErrorClass::Usage,
        }
    }
}
