//! Static square-patch token segmentation, the non-adaptive baseline.

use crate::error::{Error, Result};
use crate::raster::TokenIndexMap;

/// Patches per side; a p x p grid yields p² tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchConfig {
    pub p: u32,
}

/// Divides an image of the given size into `p * p` tokens. Pixel `(y, x)`
/// gets id `row * p + col` with `row = floor(y * p / height)` and
/// `col = floor(x * p / width)`, which stripes non-divisible dimensions into
/// near-equal bands instead of padding.
pub fn patch_segment(height: u32, width: u32, cfg: PatchConfig) -> Result<TokenIndexMap> {
    let p = cfg.p;
    if p == 0 || p > height.min(width) {
        return Err(Error::InvalidGranularity(format!(
            "p = {p} must be in [1, min({height}, {width})]"
        )));
    }
    let mut ids = Vec::with_capacity(height as usize * width as usize);
    for y in 0..height as u64 {
        let row = (y * p as u64 / height as u64) as u32;
        for x in 0..width as u64 {
            let col = (x * p as u64 / width as u64) as u32;
            ids.push(row * p + col);
        }
    }
    Ok(TokenIndexMap::new_unchecked(height, width, p * p, ids))
}
