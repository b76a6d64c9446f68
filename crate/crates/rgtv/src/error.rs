use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by the deblurring library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inputs violate a documented precondition (dimension mismatch,
    /// non-finite values, out-of-range parameters, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Solver configuration breaks a convergence requirement.
    #[error("solver configuration: {0}")]
    Config(String),

    /// A solve diverged or could not make progress.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Inputs are degenerate for the requested operation
    /// (constant image handed to the kernel solver, all-nonpositive kernel, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed file contents (kernel text, config file, image data).
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
