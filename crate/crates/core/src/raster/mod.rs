//! Core raster types shared by every tokenizer and metric, plus binary
//! morphology, connected components, label-map boundary extraction, and
//! bit-exact file I/O.

mod boundary;
mod components;
pub(crate) mod io;
mod morphology;

pub use boundary::{boundaries_from_labels, clear_border};
pub use components::{connected_components, Connectivity, LabelField};
pub use io::{
    read_fmap, read_png, read_png_float, read_seg, write_fmap, write_png, write_seg,
};
pub use morphology::{dilate, erode, StructuringElement};

use crate::error::{Error, Result};
use crate::scalar::Real;

fn checked_len(height: u32, width: u32, channels: u32) -> Result<usize> {
    let len = (height as u64)
        .checked_mul(width as u64)
        .and_then(|p| p.checked_mul(channels as u64))
        .ok_or(Error::DimensionOverflow {
            height: height as u64,
            width: width as u64,
            channels: channels as u64,
        })?;
    usize::try_from(len).map_err(|_| Error::DimensionOverflow {
        height: height as u64,
        width: width as u64,
        channels: channels as u64,
    })
}

/// An 8-bit image, row-major, channel-interleaved. `channels` is 3 for RGB
/// and 1 for grayscale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    height: u32,
    width: u32,
    channels: u32,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(height: u32, width: u32, channels: u32, data: Vec<u8>) -> Result<Self> {
        if height < 1 || width < 1 {
            return Err(Error::UnsupportedImage(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedImage(format!(
                "expected 1 or 3 channels, got {channels}"
            )));
        }
        let expected = checked_len(height, width, channels)?;
        if data.len() != expected {
            return Err(Error::UnsupportedImage(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Constant-color image, useful for synthetic inputs.
    pub fn filled(height: u32, width: u32, channels: u32, value: u8) -> Result<Self> {
        let len = checked_len(height, width, channels)?;
        Self::new(height, width, channels, vec![value; len])
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    /// Samples of pixel (y, x): one byte for grayscale, three for RGB.
    pub fn pixel(&self, y: u32, x: u32) -> &[u8] {
        let c = self.channels as usize;
        let i = (y as usize * self.width as usize + x as usize) * c;
        &self.data[i..i + c]
    }
}

/// A float raster, row-major, channel-interleaved. The single-channel
/// instance carries boundary probabilities in `[0, 1]`; multi-channel
/// instances carry feature maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap<T = f32> {
    height: u32,
    width: u32,
    channels: u32,
    data: Vec<T>,
}

impl<T: Real> FloatMap<T> {
    pub fn new(height: u32, width: u32, channels: u32, data: Vec<T>) -> Result<Self> {
        let expected = checked_len(height, width, channels)?;
        if data.len() != expected {
            return Err(Error::UnsupportedImage(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: u32, width: u32, channels: u32) -> Result<Self> {
        let len = checked_len(height, width, channels)?;
        Self::new(height, width, channels, vec![T::zero(); len])
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Sample of pixel (y, x) in channel c.
    pub fn at(&self, y: u32, x: u32, c: u32) -> T {
        let stride = self.channels as usize;
        self.data[(y as usize * self.width as usize + x as usize) * stride + c as usize]
    }

    pub fn set(&mut self, y: u32, x: u32, c: u32, value: T) {
        let stride = self.channels as usize;
        self.data[(y as usize * self.width as usize + x as usize) * stride + c as usize] = value;
    }

    /// Converts samples to another scalar width.
    pub fn cast<U: Real>(&self) -> FloatMap<U> {
        FloatMap {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self
                .data
                .iter()
                .map(|&v| U::from_f64_nearest(v.to_f64_lossless()))
                .collect(),
        }
    }

    /// Checks the boundary-map contract: one channel, every sample finite
    /// and in `[0, 1]`.
    pub fn validate_boundary_map(&self) -> Result<()> {
        if self.channels != 1 {
            return Err(Error::InvalidBoundaryMap(format!(
                "boundary map must have 1 channel, got {}",
                self.channels
            )));
        }
        for (i, &v) in self.data.iter().enumerate() {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::InvalidBoundaryMap(format!(
                    "sample {i} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// A per-pixel token index map: the segmentation. Every pixel carries an id
/// in `[0, n_tokens)` and every id occurs at least once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenIndexMap {
    height: u32,
    width: u32,
    n_tokens: u32,
    ids: Vec<u32>,
}

impl TokenIndexMap {
    pub fn new(height: u32, width: u32, n_tokens: u32, ids: Vec<u32>) -> Result<Self> {
        let expected = checked_len(height, width, 1)?;
        if ids.len() != expected {
            return Err(Error::UnsupportedImage(format!(
                "id buffer length {} does not match {height}x{width}",
                ids.len()
            )));
        }
        if n_tokens == 0 {
            return Err(Error::InvalidGranularity(
                "a token index map needs at least one token".into(),
            ));
        }
        let mut seen = vec![false; n_tokens as usize];
        for &id in &ids {
            if id >= n_tokens {
                return Err(Error::IdOutOfRange { id, n_tokens });
            }
            seen[id as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::MissingTokenId {
                id: missing as u32,
            });
        }
        Ok(Self {
            height,
            width,
            n_tokens,
            ids,
        })
    }

    /// Construction from values already known to satisfy the invariants
    /// (used by tokenizers that produce ids by construction).
    pub(crate) fn new_unchecked(height: u32, width: u32, n_tokens: u32, ids: Vec<u32>) -> Self {
        debug_assert!(ids.len() == height as usize * width as usize);
        debug_assert!({
            let mut seen = vec![false; n_tokens as usize];
            ids.iter().for_each(|&id| seen[id as usize] = true);
            seen.iter().all(|&s| s)
        });
        Self {
            height,
            width,
            n_tokens,
            ids,
        }
    }

    /// Single token covering the whole image.
    pub fn whole_image(height: u32, width: u32) -> Result<Self> {
        let len = checked_len(height, width, 1)?;
        Ok(Self::new_unchecked(height, width, 1, vec![0; len]))
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn n_tokens(&self) -> u32 {
        self.n_tokens
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn id_at(&self, y: u32, x: u32) -> u32 {
        self.ids[y as usize * self.width as usize + x as usize]
    }

    /// Pixel count per token id.
    pub fn token_areas(&self) -> Vec<u64> {
        let mut areas = vec![0u64; self.n_tokens as usize];
        for &id in &self.ids {
            areas[id as usize] += 1;
        }
        areas
    }

    /// Mask of the pixels carrying `id`.
    pub fn token_mask(&self, id: u32) -> BinaryMask {
        let bits = self.ids.iter().map(|&v| v == id).collect();
        BinaryMask::new(self.height, self.width, bits).expect("dimensions already validated")
    }

    /// Tight per-token bounding boxes as inclusive (y0, x0, y1, x1).
    pub fn token_bboxes(&self) -> Vec<(u32, u32, u32, u32)> {
        let mut boxes = vec![(u32::MAX, u32::MAX, 0u32, 0u32); self.n_tokens as usize];
        for (i, &id) in self.ids.iter().enumerate() {
            let y = (i / self.width as usize) as u32;
            let x = (i % self.width as usize) as u32;
            let b = &mut boxes[id as usize];
            b.0 = b.0.min(y);
            b.1 = b.1.min(x);
            b.2 = b.2.max(y);
            b.3 = b.3.max(x);
        }
        boxes
    }
}

/// A boolean raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: u32,
    width: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: u32, width: u32, bits: Vec<bool>) -> Result<Self> {
        let expected = checked_len(height, width, 1)?;
        if bits.len() != expected {
            return Err(Error::UnsupportedImage(format!(
                "bit buffer length {} does not match {height}x{width}",
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn filled(height: u32, width: u32, value: bool) -> Result<Self> {
        let len = checked_len(height, width, 1)?;
        Self::new(height, width, vec![value; len])
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn get(&self, y: u32, x: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, y: u32, x: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    /// Number of set pixels.
    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    /// Pixelwise AND.
    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a && b)
            .collect();
        BinaryMask::new(self.height, self.width, bits)
    }

    pub(crate) fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::DimensionMismatch {
                expected_h: self.height,
                expected_w: self.width,
                found_h: other.height,
                found_w: other.width,
            });
        }
        Ok(())
    }
}
