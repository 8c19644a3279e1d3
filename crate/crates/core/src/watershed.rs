//! Boundary-seeded watershed tokenization.
//!
//! The boundary probability map is read as a topographic surface: pixels
//! below the threshold `t` form seed basins, and a priority flood grows every
//! basin in ascending probability order until the whole image is claimed.
//! Every pixel ends up in exactly one token, so coverage is complete by
//! construction, and the single threshold controls granularity.
//!
//! [`gradient_boundary`] provides a non-learned producer of boundary maps so
//! the pipeline runs without a neural predictor.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::raster::{connected_components, BinaryMask, Connectivity, FloatMap, LabelField,
    RasterImage, TokenIndexMap};
use crate::scalar::Real;

/// Threshold and connectivity choices for the flood.
///
/// Flooding uses 4-connectivity by default so basins cannot leak diagonally
/// across one-pixel ridges; seed labelling uses 8-connectivity so diagonal
/// seed fragments merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WatershedConfig {
    /// Seed threshold: pixels with probability strictly below `t` seed the
    /// flood. Must lie in (0, 1).
    pub t: f64,
    pub flood_connectivity: Connectivity,
    pub seed_connectivity: Connectivity,
}

impl WatershedConfig {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidGranularity(format!(
                "threshold t = {t} must lie strictly inside (0, 1)"
            )));
        }
        Ok(Self {
            t,
            flood_connectivity: Connectivity::Four,
            seed_connectivity: Connectivity::Eight,
        })
    }
}

/// Seed regions: connected components of the below-threshold pixels.
/// Label 0 marks unseeded pixels; seeds are `1..=k_seeds`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedField {
    field: LabelField,
}

impl SeedField {
    pub fn labels(&self) -> &[u32] {
        self.field.labels()
    }

    pub fn label_at(&self, y: u32, x: u32) -> u32 {
        self.field.label_at(y, x)
    }

    pub fn k_seeds(&self) -> u32 {
        self.field.count()
    }

    pub fn height(&self) -> u32 {
        self.field.height()
    }

    pub fn width(&self) -> u32 {
        self.field.width()
    }
}

/// Labels the pixels with probability strictly below `cfg.t` via connected
/// components under `cfg.seed_connectivity`. Zero seeds is a valid outcome.
pub fn extract_seeds<T: Real>(map: &FloatMap<T>, cfg: &WatershedConfig) -> SeedField {
    let bits = map
        .data()
        .iter()
        .map(|&v| v.to_f64_lossless() < cfg.t)
        .collect();
    let mask = BinaryMask::new(map.height(), map.width(), bits).expect("same dimensions");
    SeedField {
        field: connected_components(&mask, cfg.seed_connectivity),
    }
}

fn neighbor_offsets(connectivity: Connectivity) -> &'static [(i64, i64)] {
    // N, S, W, E first: the documented tie-breaking enumeration order.
    match connectivity {
        Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        Connectivity::Eight => &[
            (-1, 0),
            (1, 0),
            (0, -1),
            (0, 1),
            (-1, -1),
            (-1, 1),
            (1, -1),
            (1, 1),
        ],
    }
}

struct FloodEntry<T> {
    value: T,
    seq: u64,
    index: usize,
    label: u32,
}

impl<T: Real> PartialEq for FloodEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for FloodEntry<T> {}

impl<T: Real> PartialOrd for FloodEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for FloodEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .partial_cmp(&other.value)
            .expect("boundary probabilities are totally ordered")
            .then(self.seq.cmp(&other.seq))
    }
}

/// Grows every seed region until the image is fully claimed.
///
/// The frontier is ordered by (probability ascending, insertion sequence
/// ascending), so equal-probability contact lines resolve first-in-first-out
/// with neighbors enumerated N, S, W, E. Output ids are seed labels minus
/// one; `n_tokens = k_seeds`.
///
/// Panics if `seeds.k_seeds() == 0` or the dimensions disagree; callers
/// handle the zero-seed case (see [`epoc_segment`]).
pub fn watershed_flood<T: Real>(
    map: &FloatMap<T>,
    seeds: &SeedField,
    cfg: &WatershedConfig,
) -> TokenIndexMap {
    assert!(
        seeds.k_seeds() >= 1,
        "watershed_flood requires at least one seed region"
    );
    assert!(
        map.height() == seeds.height() && map.width() == seeds.width(),
        "seed field dimensions must match the probability map"
    );
    let (h, w) = (map.height() as i64, map.width() as i64);
    let values = map.data();
    let offsets = neighbor_offsets(cfg.flood_connectivity);
    let mut labels = seeds.labels().to_vec();
    let mut heap: BinaryHeap<std::cmp::Reverse<FloodEntry<T>>> = BinaryHeap::new();
    let mut seq: u64 = 0;

    let push_unlabeled_neighbors =
        |heap: &mut BinaryHeap<std::cmp::Reverse<FloodEntry<T>>>,
         labels: &[u32],
         index: usize,
         label: u32,
         seq: &mut u64| {
            let (y, x) = (index as i64 / w, index as i64 % w);
            for &(dy, dx) in offsets {
                let (ny, nx) = (y + dy, x + dx);
                if ny < 0 || ny >= h || nx < 0 || nx >= w {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if labels[j] == 0 {
                    heap.push(std::cmp::Reverse(FloodEntry {
                        value: values[j],
                        seq: *seq,
                        index: j,
                        label,
                    }));
                    *seq += 1;
                }
            }
        };

    for i in 0..labels.len() {
        if labels[i] != 0 {
            push_unlabeled_neighbors(&mut heap, &labels, i, labels[i], &mut seq);
        }
    }
    while let Some(std::cmp::Reverse(entry)) = heap.pop() {
        if labels[entry.index] != 0 {
            continue;
        }
        labels[entry.index] = entry.label;
        push_unlabeled_neighbors(&mut heap, &labels, entry.index, entry.label, &mut seq);
    }

    let ids = labels.iter().map(|&l| l - 1).collect();
    TokenIndexMap::new_unchecked(map.height(), map.width(), seeds.k_seeds(), ids)
}

/// The full threshold-seeded watershed tokenizer: validate the boundary map,
/// extract seeds, flood. A map with zero seeds (everything at or above `t`)
/// degenerates to a single whole-image token, preserving complete coverage.
pub fn epoc_segment<T: Real>(map: &FloatMap<T>, cfg: &WatershedConfig) -> Result<TokenIndexMap> {
    map.validate_boundary_map()?;
    let seeds = extract_seeds(map, cfg);
    if seeds.k_seeds() == 0 {
        return TokenIndexMap::whole_image(map.height(), map.width());
    }
    Ok(watershed_flood(map, &seeds, cfg))
}

/// Non-learned boundary estimator: grayscale conversion, box blur of the
/// given radius, Sobel gradient magnitude, normalized to [0, 1] by the map
/// maximum. A constant image yields the all-zero map.
pub fn gradient_boundary<T: Real>(img: &RasterImage, smoothing_radius: u32) -> FloatMap<T> {
    let (h, w) = (img.height() as usize, img.width() as usize);
    let mut gray = vec![0.0f64; h * w];
    match img.channels() {
        1 => {
            for (g, &v) in gray.iter_mut().zip(img.data()) {
                *g = v as f64;
            }
        }
        _ => {
            for (i, px) in img.data().chunks_exact(3).enumerate() {
                gray[i] = 0.2126 * px[0] as f64 + 0.7152 * px[1] as f64 + 0.0722 * px[2] as f64;
            }
        }
    }

    let blurred = box_blur(&gray, h, w, smoothing_radius as usize);

    let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64 - 1) as usize;
    let at = |y: i64, x: i64| blurred[clamp(y, h) * w + clamp(x, w)];
    let mut magnitude = vec![0.0f64; h * w];
    let mut max = 0.0f64;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            let m = (gx * gx + gy * gy).sqrt();
            magnitude[(y as usize) * w + x as usize] = m;
            max = max.max(m);
        }
    }
    let data = magnitude
        .into_iter()
        .map(|m| {
            if max > 0.0 {
                T::from_f64_nearest((m / max).clamp(0.0, 1.0))
            } else {
                T::zero()
            }
        })
        .collect();
    FloatMap::new(img.height(), img.width(), 1, data).expect("same dimensions")
}

/// Separable box blur; windows are clipped to the image and normalized by
/// the clipped pixel count, so borders carry no synthetic samples.
fn box_blur(values: &[f64], h: usize, w: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return values.to_vec();
    }
    let mut horizontal = vec![0.0f64; h * w];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(w - 1);
            let sum: f64 = values[y * w + lo..=y * w + hi].iter().sum();
            horizontal[y * w + x] = sum / (hi - lo + 1) as f64;
        }
    }
    let mut out = vec![0.0f64; h * w];
    for y in 0..h {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(h - 1);
        for x in 0..w {
            let mut sum = 0.0;
            for row in lo..=hi {
                sum += horizontal[row * w + x];
            }
            out[y * w + x] = sum / (hi - lo + 1) as f64;
        }
    }
    out
}
