//! Scalar abstraction for float-carrying rasters and embeddings.

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point sample type: `f32` or `f64`.
///
/// Raster samples on disk are always `f32` (the `FMAP` format); in memory the
/// float-bearing types and operations accept either width.
pub trait Real:
    Float + FromPrimitive + NumCast + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossless widening to `f64`, used for accumulation.
    fn to_f64_lossless(self) -> f64 {
        NumCast::from(self).expect("Real is a finite-width float")
    }

    /// Round-to-nearest conversion from an `f64` accumulator.
    fn from_f64_nearest(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
