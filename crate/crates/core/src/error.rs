use thiserror::Error;

/// Everything that can go wrong while assembling, reducing or evaluating a model.
#[derive(Debug, Error)]
pub enum KmsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{matrix}: {check} check failed ({detail})")]
    Invariant {
        matrix: String,
        check: String,
        detail: String,
    },

    #[error("convective patches '{first}' and '{second}' overlap at {location}")]
    PatchOverlap {
        first: String,
        second: String,
        location: String,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("singular matrix in {context}: pivot {pivot} is {value:e}")]
    Singular { context: String, pivot: usize, value: f64 },

    #[error("cutoff {omega_m:e} rad/s captures {count} modes, more than the limit of {limit}")]
    TooManyModes { omega_m: f64, count: usize, limit: usize },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, KmsError>;

impl KmsError {
    pub(crate) fn invariant(matrix: &str, check: &str, detail: impl Into<String>) -> Self {
        KmsError::Invariant {
            matrix: matrix.to_string(),
            check: check.to_string(),
            detail: detail.into(),
        }
    }

    pub(crate) fn dim(context: &str, expected: usize, got: usize) -> Self {
        KmsError::Dimension {
            context: context.to_string(),
            expected,
            got,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        KmsError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
