//! Error type shared by every module in the crate.

use thiserror::Error;

/// Alias for results produced by this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("png error: {0}")]
    Png(#[from] image::ImageError),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },

    #[error("dimension overflow: {height} x {width} x {channels} does not fit in memory")]
    DimensionOverflow {
        height: u64,
        width: u64,
        channels: u64,
    },

    #[error("id out of range: id {id} >= n_tokens {n_tokens}")]
    IdOutOfRange { id: u32, n_tokens: u32 },

    #[error("token id {id} missing: every id in [0, n_tokens) must occur at least once")]
    MissingTokenId { id: u32 },

    #[error("invalid granularity: {0}")]
    InvalidGranularity(String),

    #[error("dimension mismatch: expected {expected_h}x{expected_w}, found {found_h}x{found_w}")]
    DimensionMismatch {
        expected_h: u32,
        expected_w: u32,
        found_h: u32,
        found_w: u32,
    },

    #[error("invalid boundary map: {0}")]
    InvalidBoundaryMap(String),

    #[error("invalid mlp weights: {0}")]
    InvalidMlpWeights(String),

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error("bench error: {0}")]
    Bench(String),
}

impl Error {
    /// True for failures that stem from the environment (files, decoding)
    /// rather than from invalid inputs. The CLI maps these to exit code 2
    /// and everything else to exit code 1.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Png(_)
                | Error::BadMagic { .. }
                | Error::TruncatedPayload { .. }
        )
    }
}
