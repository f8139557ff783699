//! Crate-wide error type.
//!
//! Fallible operations return [`Result`]. Parse errors carry enough context
//! (file line or vertex index) to locate the offending record; parameter
//! errors state the violated precondition.

use std::path::PathBuf;

/// Errors produced by cloud I/O, graph construction, and denoising.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path being accessed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed PLY header or body.
    #[error("ply parse error at line {line}: {msg}")]
    PlyParse { line: usize, msg: String },

    /// Malformed XYZ record.
    #[error("xyz parse error at line {line}: {msg}")]
    XyzParse { line: usize, msg: String },

    /// A coordinate was NaN or infinite. `index` is the zero-based vertex index.
    #[error("non-finite coordinate at vertex {index}")]
    NonFinite { index: usize },

    /// The file format could not be determined from the path.
    #[error("cannot infer cloud format from path {path:?} (expected .ply or .xyz)")]
    UnknownFormat { path: PathBuf },

    /// Operation requires a non-empty cloud.
    #[error("point cloud is empty")]
    EmptyCloud,

    /// A parameter violated its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Signal or edge-signal shape does not match the graph.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The outlier filter would remove every point.
    #[error("degree filter with tau = {tau} removes all {n} points")]
    AllPointsRemoved { tau: f64, n: usize },
}

impl Error {
    /// Annotates an I/O failure with the path being accessed.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// A precondition violation described by `msg`.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
