use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value")]
    NonFinite,

    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("unsupported image layout in {path}: {reason}")]
    UnsupportedLayout { path: PathBuf, reason: String },

    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("environment map carries no light")]
    NoLight,

    #[error("missing asset `{0}`")]
    MissingAsset(String),

    #[error("asset registry has no {0} assets")]
    EmptyAssetClass(&'static str),

    #[error("empty mask")]
    EmptyMask,

    #[error("all {0} samples failed")]
    AllSamplesFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Exr(#[from] exr::error::Error),
}
