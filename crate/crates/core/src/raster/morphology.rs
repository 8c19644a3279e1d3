//! Binary morphology with a disk structuring element.
//!
//! `dilate` and `erode` are computed through an exact squared Euclidean
//! distance transform rather than by scanning the disk footprint per pixel,
//! which keeps the cost independent of the kernel size. Out-of-image pixels
//! are unset for both operations, so erosion eats the image border.

use super::BinaryMask;

/// A disk footprint: all integer offsets `(dy, dx)` with
/// `dy² + dx² <= r²` where `r = (kernel_size - 1) / 2`.
///
/// `kernel_size` 3 is the 4-neighborhood plus center; `kernel_size` 5 is a
/// 13-pixel disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    kernel_size: u32,
    offsets: Vec<(i32, i32)>,
}

impl StructuringElement {
    /// Builds the disk of the given odd kernel size.
    ///
    /// Panics if `kernel_size` is even or zero.
    pub fn disk(kernel_size: u32) -> Self {
        assert!(
            kernel_size >= 1 && kernel_size % 2 == 1,
            "kernel size must be odd and >= 1, got {kernel_size}"
        );
        let r = (kernel_size as i32 - 1) / 2;
        let r_sq = r * r;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dy * dy + dx * dx <= r_sq {
                    offsets.push((dy, dx));
                }
            }
        }
        // Sort by radius so footprint scans bail out early near edges.
        offsets.sort_by_key(|&(dy, dx)| (dy * dy + dx * dx, dy, dx));
        Self {
            kernel_size,
            offsets,
        }
    }

    pub fn kernel_size(&self) -> u32 {
        self.kernel_size
    }

    pub fn radius(&self) -> u32 {
        (self.kernel_size - 1) / 2
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }
}

/// Output pixel set iff any input pixel within the disk footprint is set.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (h, w) = (mask.height() as usize, mask.width() as usize);
    let r_sq = (se.radius() as f64) * (se.radius() as f64);
    let dist = squared_edt(h, w, |i| mask.bits()[i]);
    let bits = dist.iter().map(|&d| d <= r_sq).collect();
    BinaryMask::new(mask.height(), mask.width(), bits).expect("same dimensions")
}

/// Output pixel set iff every pixel within the disk footprint is set;
/// footprint positions outside the image count as unset.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (h, w) = (mask.height() as usize, mask.width() as usize);
    let r = se.radius() as f64;
    let r_sq = r * r;
    let dist = squared_edt(h, w, |i| !mask.bits()[i]);
    let mut bits = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            let border = (y + 1).min(h - y).min(x + 1).min(w - x) as f64;
            bits[y * w + x] = dist[y * w + x] > r_sq && border > r;
        }
    }
    BinaryMask::new(mask.height(), mask.width(), bits).expect("same dimensions")
}

// Finite stand-in for "no feature in this line"; any true squared distance
// in a raster is many orders of magnitude smaller, so envelope arithmetic
// stays exact in f64.
const EDT_UNREACHED: f64 = 1e15;

/// Exact squared Euclidean distance to the nearest feature pixel,
/// `f64::INFINITY` where no feature exists. Felzenszwalb-Huttenlocher
/// separable parabola envelope, columns then rows.
pub(crate) fn squared_edt(h: usize, w: usize, feature: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut dist: Vec<f64> = (0..h * w)
        .map(|i| if feature(i) { 0.0 } else { EDT_UNREACHED })
        .collect();

    let n = h.max(w);
    let mut f = vec![0.0f64; n];
    let mut d = vec![0.0f64; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];

    for x in 0..w {
        for y in 0..h {
            f[y] = dist[y * w + x];
        }
        edt_1d(&f[..h], &mut d, &mut v, &mut z);
        for y in 0..h {
            dist[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&dist[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut d, &mut v, &mut z);
        dist[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }
    for value in &mut dist {
        if *value >= EDT_UNREACHED {
            *value = f64::INFINITY;
        }
    }
    dist
}

/// One-dimensional squared distance transform: `d[p] = min_q (p-q)² + f[q]`.
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k: usize = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        loop {
            let p = v[k];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                // z[0] = -inf, so k never underflows.
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    let mut k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = (q as f64) - (p as f64);
        d[q] = diff * diff + f[p];
    }
}
