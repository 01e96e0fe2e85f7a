//! Error type shared across the toolkit.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// File is not a NIfTI-1 single file ("n+1\0" magic required; .hdr/.img
    /// pairs are rejected here as well).
    #[error("not a NIfTI-1 single file (bad magic)")]
    BadMagic,

    #[error("bad NIfTI-1 header: {0}")]
    BadHeader(String),

    /// sizeof_hdr reads as 348 only after byte swapping.
    #[error("big-endian NIfTI files are not supported")]
    BigEndianUnsupported,

    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),

    #[error("truncated data: need {expected} bytes, found {actual}")]
    TruncatedData { expected: u64, actual: u64 },

    #[error("io failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("affine is singular (non-invertible upper 3x3)")]
    SingularAffine,

    #[error("degenerate overlap: {0}")]
    DegenerateOverlap(String),

    #[error("volume extents {0:?} too small to register (need at least 8 voxels per axis)")]
    VolumeTooSmall([usize; 3]),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("lesion mask has no voxels set")]
    EmptyLesion,

    #[error("bad atlas: {0}")]
    BadAtlas(String),

    #[error("degenerate intensity range: {0}")]
    DegenerateRange(String),

    #[error("shape mismatch: {left} vs {right} elements")]
    ShapeMismatch { left: usize, right: usize },

    #[error("empty input array")]
    EmptyInput,

    #[error("image {width}x{height} too small (SSIM needs at least 11x11)")]
    TooSmall { width: usize, height: usize },

    #[error("no slices selected (auto selection found no lesion-bearing slices)")]
    NoSlicesSelected,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
