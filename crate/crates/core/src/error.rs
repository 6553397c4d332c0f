use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("view {index} missing: {path}")]
    MissingView { index: usize, path: PathBuf },

    #[error("view {index} ({path}) is {found:?}, expected {expected:?}")]
    ViewShape {
        index: usize,
        path: PathBuf,
        expected: (u32, u32, usize),
        found: (u32, u32, usize),
    },

    #[error("cannot decode image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("malformed PFM: {0}")]
    Pfm(String),

    #[error("scene config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("missing ground truth for scene {0}")]
    MissingGroundTruth(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by the caller's data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::MissingView { .. } | Error::Image { .. }
        )
    }
}
