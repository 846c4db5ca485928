use thiserror::Error;

/// Errors raised by the forward model, the geometry tools and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or configuration. Several problems may be joined
    /// into one report.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The kernel grid is cut off before the kernel has decayed.
    #[error("kernel truncated: {0}")]
    Truncation(String),

    /// The dense partially coherent path was asked for more work than it
    /// allows without an explicit opt-in.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("smoothed PSF construction failed: best deviation {best_deviation:.3e} > target {target:.3e}")]
    ConstructionFailed { best_deviation: f64, target: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        match e {
            image::ImageError::IoError(io) => Error::Io(io),
            other => Error::Parse(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
