//! Boundary masks derived from token index maps.

use super::{BinaryMask, StructuringElement, TokenIndexMap};

/// Marks, for every token, the pixels of `dilate(mask) AND NOT erode(mask)`
/// and returns the union over all tokens.
///
/// Because tokens partition the image this reduces to a single scan: a pixel
/// is a boundary pixel iff some pixel within the disk footprint carries a
/// different id, or the footprint leaves the image (the erosion border rule,
/// which makes a whole-image token produce a border ring).
pub fn boundaries_from_labels(seg: &TokenIndexMap, kernel_size: u32) -> BinaryMask {
    let se = StructuringElement::disk(kernel_size);
    let (h, w) = (seg.height() as i64, seg.width() as i64);
    let ids = seg.ids();
    let mut bits = vec![false; ids.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let id = ids[i];
            let mut boundary = false;
            for &(dy, dx) in se.offsets() {
                let (ny, nx) = (y + dy as i64, x + dx as i64);
                if ny < 0 || ny >= h || nx < 0 || nx >= w {
                    boundary = true;
                    break;
                }
                if ids[(ny * w + nx) as usize] != id {
                    boundary = true;
                    break;
                }
            }
            bits[i] = boundary;
        }
    }
    BinaryMask::new(seg.height(), seg.width(), bits).expect("same dimensions")
}

/// Clears a ring of the given width along the image border; used to drop the
/// border artifact that the erosion border rule introduces.
pub fn clear_border(mask: &BinaryMask, width: u32) -> BinaryMask {
    let mut out = mask.clone();
    let (h, w) = (mask.height(), mask.width());
    for y in 0..h {
        for x in 0..w {
            if y < width || x < width || h - 1 - y < width || w - 1 - x < width {
                out.set(y, x, false);
            }
        }
    }
    out
}
