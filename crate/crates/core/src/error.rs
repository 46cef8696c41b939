use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment layer.
#[derive(Debug, Error)]
pub enum KirchhoffError {
    /// Two objects that must share a grid do not.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// Malformed input: wrong length, non-finite value, bad grid size.
    #[error("invalid structure: {0}")]
    Structure(String),

    /// An argument is outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input collapses the problem (zero field, zero norm) so the result is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An iterative method failed; the message carries diagnostics.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Configuration problems, all of them at once.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, KirchhoffError>;

impl KirchhoffError {
    /// Process exit code: 2 for configuration errors, 1 for i/o, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) | Self::Json(_) => 1,
            _ => 3,
        }
    }
}
