use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid brick parameters: {0}")]
    BrickParams(String),

    #[error("unknown tiling name `{0}`")]
    UnknownTiling(String),

    #[error("malformed tiling file: {field}: {message}")]
    TilingFormat { field: &'static str, message: String },

    #[error("tiling `{name}` failed validation: {failures}")]
    InvalidTiling { name: String, failures: String },

    #[error("cell index {cell} out of range for a tiling with {n} cells")]
    CellOutOfRange { cell: usize, n: usize },

    #[error("tiling has {n} cells; at most {cap} are supported here ({bytes} bytes would be needed)")]
    TooLarge { n: usize, cap: usize, bytes: u128 },

    #[error("vector length {got} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid class id {id} (partition has {count} classes)")]
    InvalidClass { id: usize, count: usize },

    #[error("invalid level {0}: must be at least 1")]
    InvalidLevel(u32),

    #[error("eigensolver: {0}")]
    Solver(String),

    #[error("spectrum: {0}")]
    Spectrum(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
