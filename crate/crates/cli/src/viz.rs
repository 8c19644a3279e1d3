//! Deterministic segmentation rendering: one hashed color per token id,
//! token boundaries drawn in black.

use tokseg::raster::{boundaries_from_labels, clear_border};
use tokseg::{Error, RasterImage, Result, TokenIndexMap};

/// Fixed integer hash from token id to RGB. Pure black is reserved for drawn
/// boundaries, so any id hashing to black is nudged to gray.
pub fn palette_color(id: u32) -> [u8; 3] {
    let h = (id as u64).wrapping_mul(2654435761) as u32;
    let rgb = [(h >> 16) as u8, (h >> 8) as u8, h as u8];
    if rgb == [0, 0, 0] {
        [128, 128, 128]
    } else {
        rgb
    }
}

/// Fills each token with its palette color, alpha-blends over `base` when
/// given, then draws token boundaries (border ring excluded) in black.
pub fn visualize(
    seg: &TokenIndexMap,
    base: Option<&RasterImage>,
    alpha: f64,
) -> Result<RasterImage> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidGranularity(format!(
            "alpha = {alpha} must lie in [0, 1]"
        )));
    }
    let (h, w) = (seg.height(), seg.width());
    if let Some(base) = base {
        if base.height() != h || base.width() != w {
            return Err(Error::DimensionMismatch {
                expected_h: h,
                expected_w: w,
                found_h: base.height(),
                found_w: base.width(),
            });
        }
    }

    let mut out = RasterImage::filled(h, w, 3, 0)?;
    for y in 0..h {
        for x in 0..w {
            let color = palette_color(seg.id_at(y, x));
            let i = ((y * w + x) * 3) as usize;
            for c in 0..3 {
                let value = match base {
                    Some(base) => {
                        let under = match base.channels() {
                            3 => base.pixel(y, x)[c],
                            _ => base.pixel(y, x)[0],
                        };
                        (alpha * color[c] as f64 + (1.0 - alpha) * under as f64).round() as u8
                    }
                    None => color[c],
                };
                out.data_mut()[i + c] = value;
            }
        }
    }

    let boundary = clear_border(&boundaries_from_labels(seg, 3), 1);
    for y in 0..h {
        for x in 0..w {
            if boundary.get(y, x) {
                let i = ((y * w + x) * 3) as usize;
                out.data_mut()[i..i + 3].fill(0);
            }
        }
    }
    Ok(out)
}
