use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum GmfgError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Positivity guard of the Fokker-Planck step: the cell Peclet number
    /// `max|drift| * h` must not exceed one.
    #[error(
        "Fokker-Planck stability guard violated: max|drift| = {max_drift:.6e} needs h <= {required_h:.6e} \
         (n >= {required_n}), grid has n = {n}"
    )]
    StabilityGuard {
        max_drift: f64,
        required_h: f64,
        required_n: usize,
        n: usize,
    },

    /// The explicit part of the theta-scheme requires `dt * |c|_0 < 1`.
    #[error("time step too large: dt * |c|_0 = {product:.6e} >= 1, use dt < {required_dt:.6e}")]
    TimeStepTooLarge { product: f64, required_dt: f64 },

    #[error("positivity lost: {0}")]
    Positivity(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, GmfgError>;

impl GmfgError {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        GmfgError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        GmfgError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(GmfgError::ShapeMismatch { expected, got })
    }
}
