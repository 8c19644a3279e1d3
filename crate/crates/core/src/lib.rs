//! Subobject-level image tokenization.
//!
//! An image tokenizer partitions an image into `N` pixel groups and represents
//! the partition as a per-pixel token index map. This crate implements three
//! tokenizers — fixed square patches, SLIC superpixels, and a boundary-seeded
//! watershed (`epoc`) that floods basins of a boundary probability map — plus
//! the machinery around them:
//!
//! * [`raster`]: raster types, binary morphology, connected components,
//!   label-map boundary extraction, and bit-exact `FMAP`/`SEG`/PNG file I/O;
//! * [`patch`], [`slic`], [`watershed`]: the tokenizers themselves;
//! * [`metrics`]: boundary precision/recall, token monosemanticity,
//!   and token-size distribution;
//! * [`embedding`]: content pooling, box-mask position encoding, MLP fusion,
//!   and token truncation;
//! * [`bench`]: a multi-worker throughput harness.
//!
//! Float-carrying types are generic over the sample scalar through the
//! [`scalar::Real`] trait (`f32` or `f64`); the default scalar everywhere is
//! `f32`, which matches the on-disk `FMAP` sample format.

pub mod bench;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod patch;
pub mod raster;
pub mod scalar;
pub mod slic;
pub mod watershed;

pub use error::{Error, Result};
pub use raster::{BinaryMask, FloatMap, RasterImage, StructuringElement, TokenIndexMap};
pub use scalar::Real;
