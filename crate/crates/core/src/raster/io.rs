//! Bit-exact file formats.
//!
//! `FMAP`: magic `FMP1` | u32-LE height | u32-LE width | u32-LE channels |
//! f32-LE samples, row-major, channel-interleaved.
//!
//! `SEG`: magic `SEG1` | u32-LE height | u32-LE width | u32-LE n_tokens |
//! u32-LE ids, row-major.
//!
//! PNG reading and writing is delegated to the `image` crate; writes are
//! non-interlaced 8-bit.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{FloatMap, RasterImage, TokenIndexMap};

pub(crate) const FMAP_MAGIC: [u8; 4] = *b"FMP1";
pub(crate) const SEG_MAGIC: [u8; 4] = *b"SEG1";

/// Little-endian cursor over a byte buffer, reporting truncation with the
/// total number of bytes the current read would have needed.
pub(crate) struct LeReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> LeReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::TruncatedPayload {
            expected: usize::MAX,
            actual: self.buf.len(),
        })?;
        if end > self.buf.len() {
            return Err(Error::TruncatedPayload {
                expected: end,
                actual: self.buf.len(),
            });
        }
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        let found = [got[0], got[1], got[2], got[3]];
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn f32_slice(&mut self, count: usize) -> Result<Vec<f32>> {
        let bytes = self.take(count.checked_mul(4).ok_or(Error::TruncatedPayload {
            expected: usize::MAX,
            actual: self.buf.len(),
        })?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub(crate) fn u32_slice(&mut self, count: usize) -> Result<Vec<u32>> {
        let bytes = self.take(count.checked_mul(4).ok_or(Error::TruncatedPayload {
            expected: usize::MAX,
            actual: self.buf.len(),
        })?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

fn payload_len(height: u32, width: u32, channels: u32) -> Result<usize> {
    let len = (height as u64)
        .checked_mul(width as u64)
        .and_then(|p| p.checked_mul(channels as u64))
        .filter(|&p| usize::try_from(p).is_ok() && p.checked_mul(4).is_some())
        .ok_or(Error::DimensionOverflow {
            height: height as u64,
            width: width as u64,
            channels: channels as u64,
        })?;
    Ok(len as usize)
}

pub fn read_fmap(path: impl AsRef<Path>) -> Result<FloatMap<f32>> {
    let bytes = fs::read(path)?;
    let mut r = LeReader::new(&bytes);
    r.magic(FMAP_MAGIC)?;
    let height = r.u32()?;
    let width = r.u32()?;
    let channels = r.u32()?;
    let len = payload_len(height, width, channels)?;
    let data = r.f32_slice(len)?;
    FloatMap::new(height, width, channels, data)
}

pub fn write_fmap(path: impl AsRef<Path>, map: &FloatMap<f32>) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + map.data().len() * 4);
    bytes.extend_from_slice(&FMAP_MAGIC);
    bytes.extend_from_slice(&map.height().to_le_bytes());
    bytes.extend_from_slice(&map.width().to_le_bytes());
    bytes.extend_from_slice(&map.channels().to_le_bytes());
    for &v in map.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_seg(path: impl AsRef<Path>) -> Result<TokenIndexMap> {
    let bytes = fs::read(path)?;
    let mut r = LeReader::new(&bytes);
    r.magic(SEG_MAGIC)?;
    let height = r.u32()?;
    let width = r.u32()?;
    let n_tokens = r.u32()?;
    let len = payload_len(height, width, 1)?;
    let ids = r.u32_slice(len)?;
    TokenIndexMap::new(height, width, n_tokens, ids)
}

pub fn write_seg(path: impl AsRef<Path>, seg: &TokenIndexMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + seg.ids().len() * 4);
    bytes.extend_from_slice(&SEG_MAGIC);
    bytes.extend_from_slice(&seg.height().to_le_bytes());
    bytes.extend_from_slice(&seg.width().to_le_bytes());
    bytes.extend_from_slice(&seg.n_tokens().to_le_bytes());
    for &id in seg.ids() {
        bytes.extend_from_slice(&id.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a PNG as an 8-bit raster: grayscale stays single-channel, anything
/// with color is converted to RGB.
pub fn read_png(path: impl AsRef<Path>) -> Result<RasterImage> {
    let img = image::open(path.as_ref())?;
    match img {
        image::DynamicImage::ImageLuma8(gray) => {
            let (w, h) = gray.dimensions();
            RasterImage::new(h, w, 1, gray.into_raw())
        }
        image::DynamicImage::ImageLuma16(_) => Err(Error::UnsupportedImage(
            "16-bit grayscale holds more than 8-bit samples; load it with read_png_float".into(),
        )),
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            RasterImage::new(h, w, 3, rgb.into_raw())
        }
    }
}

/// Reads a PNG as a float raster, dividing every sample by its format's
/// maximum value: 8-bit by 255, 16-bit by 65535. Grayscale produces one
/// channel; color produces three.
pub fn read_png_float(path: impl AsRef<Path>) -> Result<FloatMap<f32>> {
    let img = image::open(path.as_ref())?;
    let (w, h) = (img.width(), img.height());
    match img {
        image::DynamicImage::ImageLuma8(gray) => {
            let data = gray.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            FloatMap::new(h, w, 1, data)
        }
        image::DynamicImage::ImageLuma16(gray) => {
            let data = gray
                .into_raw()
                .iter()
                .map(|&v| v as f32 / 65535.0)
                .collect();
            FloatMap::new(h, w, 1, data)
        }
        image::DynamicImage::ImageRgb16(rgb) => {
            let data = rgb
                .into_raw()
                .iter()
                .map(|&v| v as f32 / 65535.0)
                .collect();
            FloatMap::new(h, w, 3, data)
        }
        other => {
            let rgb = other.to_rgb8();
            let data = rgb.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            FloatMap::new(h, w, 3, data)
        }
    }
}

pub fn write_png(path: impl AsRef<Path>, img: &RasterImage) -> Result<()> {
    match img.channels() {
        1 => {
            let buf = image::GrayImage::from_raw(img.width(), img.height(), img.data().to_vec())
                .expect("dimensions validated at construction");
            buf.save_with_format(path.as_ref(), image::ImageFormat::Png)?;
        }
        3 => {
            let buf = image::RgbImage::from_raw(img.width(), img.height(), img.data().to_vec())
                .expect("dimensions validated at construction");
            buf.save_with_format(path.as_ref(), image::ImageFormat::Png)?;
        }
        c => {
            return Err(Error::UnsupportedImage(format!(
                "png writer handles 1 or 3 channels, got {c}"
            )))
        }
    }
    Ok(())
}
