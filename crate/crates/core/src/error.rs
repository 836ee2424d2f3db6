use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "density {density} per resolution cell needs p = {p:.4} > 1 on this grid (cell covers {cell_pixels:.2} pixels)"
    )]
    DensityUnrepresentable { density: f64, cell_pixels: f64, p: f64 },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid sample at index {index}: {reason}")]
    InvalidSample { index: usize, reason: &'static str },

    #[error("solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("window of {window_pixels} px is smaller than {multiple} resolution cells ({cell_pixels:.1} px each)")]
    WindowTooSmall { window_pixels: usize, cell_pixels: f64, multiple: f64 },

    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    #[error("bad magic \"{}\", expected \"QUSD\"", .0.escape_ascii())]
    BadMagic([u8; 4]),

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("digest mismatch for {what}")]
    DigestMismatch { what: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("sample {index} failed: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::BadMagic(_)
            | Error::UnsupportedVersion(_)
            | Error::Truncated(_)
            | Error::DigestMismatch { .. }
            | Error::Format(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::Sample { source, .. } => source.kind(),
            _ => ErrorKind::Numeric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
