use thiserror::Error;

pub type Result<T> = std::result::Result<T, NphcError>;

#[derive(Debug, Error)]
pub enum NphcError {
    #[error("stability violation: spectral radius {radius:.6} is not below {limit:.6}")]
    StabilityViolation { radius: f64, limit: f64 },

    #[error("matrix is numerically singular{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    SingularMatrix { context: Option<String> },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("invalid window: 2H = {} must be below the horizon T = {horizon} ({mode})", 2.0 * half_width)]
    InvalidWindow {
        half_width: f64,
        horizon: f64,
        mode: &'static str,
    },

    #[error("input too large for the brute-force oracle: {events} events (limit {limit})")]
    TooLarge { events: usize, limit: usize },

    #[error("degenerate cumulants: {0}")]
    DegenerateCumulants(String),

    #[error("loss became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("dimension {0} is too small (need at least 2)")]
    DimensionTooSmall(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Io,
}

impl NphcError {
    pub fn class(&self) -> ErrorClass {
        use NphcError::*;
        match self {
            StabilityViolation { .. }
            | SingularMatrix { .. }
            | NonConvergence { .. }
            | DegenerateCumulants(_)
            | NonFinite { .. } => ErrorClass::Numeric,
            Io { .. } => ErrorClass::Io,
            InvalidWindow { .. }
            | TooLarge { .. }
            | ShapeMismatch { .. }
            | DimensionTooSmall(_)
            | InvalidParameter(_)
            | Parse { .. }
            | Validation(_) => ErrorClass::Validation,
        }
    }

    /// Exit code: 2 validation, 3 numeric failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Numeric => 3,
            ErrorClass::Io => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        use NphcError::*;
        match self {
            StabilityViolation { .. } => "StabilityViolation",
            SingularMatrix { .. } => "SingularMatrix",
            NonConvergence { .. } => "NonConvergence",
            InvalidWindow { .. } => "InvalidWindow",
            TooLarge { .. } => "TooLarge",
            DegenerateCumulants(_) => "DegenerateCumulants",
            NonFinite { .. } => "NonFinite",
            ShapeMismatch { .. } => "ShapeMismatch",
            DimensionTooSmall(_) => "DimensionTooSmall",
            InvalidParameter(_) => "InvalidParameter",
            Parse { .. } => "ParseError",
            Validation(_) => "ValidationError",
            Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        NphcError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn singular(context: impl Into<String>) -> Self {
        NphcError::SingularMatrix {
            context: Some(context.into()),
        }
    }
}
