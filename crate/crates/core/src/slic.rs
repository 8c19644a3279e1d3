//! SLIC superpixel tokenization: k-means clustering in joint CIELAB-position
//! space with a compactness weight, followed by optional connectivity
//! enforcement.

use crate::error::{Error, Result};
use crate::raster::{FloatMap, RasterImage, TokenIndexMap};
use crate::scalar::Real;

/// Superpixel clustering parameters. `k` is the target cluster count and the
/// granularity control; the final token count never exceeds it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicConfig {
    pub k: u32,
    /// Weight `m` of spatial distance against color distance.
    pub compactness: f64,
    pub iterations: u32,
    pub enforce_connectivity: bool,
}

impl SlicConfig {
    /// Canonical defaults: `m = 10`, 10 iterations, connectivity enforced.
    pub fn new(k: u32) -> Self {
        Self {
            k,
            compactness: 10.0,
            iterations: 10,
            enforce_connectivity: true,
        }
    }
}

/// A k-means center in joint color-position space.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ClusterCenter {
    l: f64,
    a: f64,
    b: f64,
    y: f64,
    x: f64,
}

/// Converts an RGB raster to CIELAB under the D65 white point with standard
/// sRGB linearization. Output channels are (L, a, b).
pub fn rgb_to_lab<T: Real>(img: &RasterImage) -> Result<FloatMap<T>> {
    if img.channels() != 3 {
        return Err(Error::UnsupportedImage(format!(
            "rgb_to_lab requires 3 channels, got {}",
            img.channels()
        )));
    }
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|px| {
            let (l, a, b) = srgb_to_lab(px[0], px[1], px[2]);
            [
                T::from_f64_nearest(l),
                T::from_f64_nearest(a),
                T::from_f64_nearest(b),
            ]
        })
        .collect();
    FloatMap::new(img.height(), img.width(), 3, data)
}

fn srgb_to_lab(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    fn linearize(c: u8) -> f64 {
        let c = c as f64 / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    }
    let (rl, gl, bl) = (linearize(r), linearize(g), linearize(b));
    let x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    let y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    let z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;

    // D65 reference white.
    const WHITE: (f64, f64, f64) = (0.95047, 1.0, 1.08883);
    fn f(t: f64) -> f64 {
        const DELTA: f64 = 6.0 / 29.0;
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    }
    let (fx, fy, fz) = (f(x / WHITE.0), f(y / WHITE.1), f(z / WHITE.2));
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// Clusters pixels into at most `k` superpixel tokens.
///
/// Centers start on a regular grid with step `S = sqrt(H*W/k)`, each nudged
/// to the lowest-gradient pixel of its 3x3 neighborhood. Each round assigns
/// pixels to the nearest center within a 2S window under
/// `D² = d_lab² + (d_xy / S)² m²` and recomputes the centers. With
/// `enforce_connectivity`, fragments smaller than `S²/4` merge into the
/// largest adjacent token so every token is 4-connected. Fully deterministic.
pub fn slic_segment(img: &RasterImage, cfg: &SlicConfig) -> Result<TokenIndexMap> {
    let (h, w) = (img.height() as usize, img.width() as usize);
    let pixels = h * w;
    if cfg.k == 0 || cfg.k as usize > pixels {
        return Err(Error::InvalidGranularity(format!(
            "k = {} must be in [1, {pixels}]",
            cfg.k
        )));
    }
    let lab: FloatMap<f64> = if img.channels() == 3 {
        rgb_to_lab(img)?
    } else {
        gray_as_lab(img)
    };
    let lab = lab.data();
    let step = ((pixels as f64) / cfg.k as f64).sqrt();

    let mut centers = initial_centers(h, w, step, cfg.k as usize);
    perturb_to_lowest_gradient(&mut centers, lab, h, w);

    let m_sq = cfg.compactness * cfg.compactness;
    let inv_step_sq = 1.0 / (step * step);
    let mut assignment = vec![u32::MAX; pixels];
    let mut best = vec![f64::INFINITY; pixels];

    for _ in 0..cfg.iterations.max(1) {
        assignment.fill(u32::MAX);
        best.fill(f64::INFINITY);
        for (ci, center) in centers.iter().enumerate() {
            let y_lo = ((center.y - step).floor().max(0.0)) as usize;
            let y_hi = ((center.y + step).ceil() as usize).min(h - 1);
            let x_lo = ((center.x - step).floor().max(0.0)) as usize;
            let x_hi = ((center.x + step).ceil() as usize).min(w - 1);
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let i = y * w + x;
                    let d = joint_distance_sq(center, lab, i, y, x, m_sq, inv_step_sq);
                    if d < best[i] {
                        best[i] = d;
                        assignment[i] = ci as u32;
                    }
                }
            }
        }
        update_centers(&mut centers, &assignment, lab, w);
    }

    // Windows move with their centers, so a pixel can end up outside every
    // window; give it the globally nearest center.
    for i in 0..pixels {
        if assignment[i] == u32::MAX {
            let (y, x) = (i / w, i % w);
            let mut best_d = f64::INFINITY;
            for (ci, center) in centers.iter().enumerate() {
                let d = joint_distance_sq(center, lab, i, y, x, m_sq, inv_step_sq);
                if d < best_d {
                    best_d = d;
                    assignment[i] = ci as u32;
                }
            }
        }
    }

    let ids = if cfg.enforce_connectivity {
        enforce_connectivity(&assignment, h, w, step * step / 4.0)
    } else {
        compact_ids(&assignment)
    };
    let n = ids.iter().max().map_or(1, |&m| m + 1);
    Ok(TokenIndexMap::new_unchecked(
        img.height(),
        img.width(),
        n,
        ids,
    ))
}

/// Grayscale images reuse the pipeline by mapping intensity to L and leaving
/// a and b at zero.
fn gray_as_lab(img: &RasterImage) -> FloatMap<f64> {
    let data = img
        .data()
        .iter()
        .flat_map(|&v| [v as f64 / 255.0 * 100.0, 0.0, 0.0])
        .collect();
    FloatMap::new(img.height(), img.width(), 3, data).expect("same dimensions")
}

fn initial_centers(h: usize, w: usize, step: f64, k: usize) -> Vec<ClusterCenter> {
    let axis_positions = |extent: usize| -> Vec<f64> {
        let mut positions = Vec::new();
        let mut pos = step / 2.0;
        while pos < extent as f64 {
            positions.push(pos);
            pos += step;
        }
        if positions.is_empty() {
            positions.push(extent as f64 / 2.0);
        }
        positions
    };
    let mut centers = Vec::new();
    'grid: for &y in &axis_positions(h) {
        for &x in &axis_positions(w) {
            centers.push(ClusterCenter {
                l: 0.0,
                a: 0.0,
                b: 0.0,
                y: y.min(h as f64 - 1.0),
                x: x.min(w as f64 - 1.0),
            });
            // Rounding can make the grid overshoot k; keep the raster-first k.
            if centers.len() == k {
                break 'grid;
            }
        }
    }
    centers
}

fn gradient_at(lab: &[f64], h: usize, w: usize, y: usize, x: usize) -> f64 {
    let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64 - 1) as usize;
    let sample = |y: usize, x: usize| {
        let i = (y * w + x) * 3;
        (lab[i], lab[i + 1], lab[i + 2])
    };
    let (y, x) = (y as i64, x as i64);
    let dx = {
        let (l1, a1, b1) = sample(clamp(y, h), clamp(x + 1, w));
        let (l0, a0, b0) = sample(clamp(y, h), clamp(x - 1, w));
        (l1 - l0).powi(2) + (a1 - a0).powi(2) + (b1 - b0).powi(2)
    };
    let dy = {
        let (l1, a1, b1) = sample(clamp(y + 1, h), clamp(x, w));
        let (l0, a0, b0) = sample(clamp(y - 1, h), clamp(x, w));
        (l1 - l0).powi(2) + (a1 - a0).powi(2) + (b1 - b0).powi(2)
    };
    dx + dy
}

fn perturb_to_lowest_gradient(centers: &mut [ClusterCenter], lab: &[f64], h: usize, w: usize) {
    for center in centers.iter_mut() {
        let cy = (center.y as usize).min(h - 1);
        let cx = (center.x as usize).min(w - 1);
        let mut best = (f64::INFINITY, cy, cx);
        for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
            for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                let g = gradient_at(lab, h, w, ny, nx);
                if g < best.0 {
                    best = (g, ny, nx);
                }
            }
        }
        let i = (best.1 * w + best.2) * 3;
        *center = ClusterCenter {
            l: lab[i],
            a: lab[i + 1],
            b: lab[i + 2],
            y: best.1 as f64,
            x: best.2 as f64,
        };
    }
}

fn joint_distance_sq(
    center: &ClusterCenter,
    lab: &[f64],
    i: usize,
    y: usize,
    x: usize,
    m_sq: f64,
    inv_step_sq: f64,
) -> f64 {
    let dl = lab[i * 3] - center.l;
    let da = lab[i * 3 + 1] - center.a;
    let db = lab[i * 3 + 2] - center.b;
    let dy = y as f64 - center.y;
    let dx = x as f64 - center.x;
    dl * dl + da * da + db * db + (dy * dy + dx * dx) * inv_step_sq * m_sq
}

fn update_centers(centers: &mut [ClusterCenter], assignment: &[u32], lab: &[f64], w: usize) {
    let mut sums = vec![[0.0f64; 6]; centers.len()];
    for (i, &ci) in assignment.iter().enumerate() {
        if ci == u32::MAX {
            continue;
        }
        let s = &mut sums[ci as usize];
        s[0] += lab[i * 3];
        s[1] += lab[i * 3 + 1];
        s[2] += lab[i * 3 + 2];
        s[3] += (i / w) as f64;
        s[4] += (i % w) as f64;
        s[5] += 1.0;
    }
    for (center, s) in centers.iter_mut().zip(&sums) {
        if s[5] > 0.0 {
            *center = ClusterCenter {
                l: s[0] / s[5],
                a: s[1] / s[5],
                b: s[2] / s[5],
                y: s[3] / s[5],
                x: s[4] / s[5],
            };
        }
    }
}

/// Renumbers ids to a contiguous range in raster first-touch order.
fn compact_ids(assignment: &[u32]) -> Vec<u32> {
    let max = assignment.iter().copied().max().unwrap_or(0) as usize;
    let mut remap = vec![u32::MAX; max + 1];
    let mut next = 0u32;
    assignment
        .iter()
        .map(|&id| {
            if remap[id as usize] == u32::MAX {
                remap[id as usize] = next;
                next += 1;
            }
            remap[id as usize]
        })
        .collect()
}

/// Splits the assignment into 4-connected regions, then absorbs regions
/// smaller than `min_area` into their largest adjacent region. Remaining
/// regions become tokens, numbered in raster first-touch order.
fn enforce_connectivity(assignment: &[u32], h: usize, w: usize, min_area: f64) -> Vec<u32> {
    // 4-connected regions of equal assignment.
    let mut region = vec![u32::MAX; assignment.len()];
    let mut areas: Vec<u64> = Vec::new();
    let mut first_pixel: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..assignment.len() {
        if region[start] != u32::MAX {
            continue;
        }
        let id = areas.len() as u32;
        areas.push(0);
        first_pixel.push(start);
        stack.push(start);
        region[start] = id;
        while let Some(i) = stack.pop() {
            areas[id as usize] += 1;
            let (y, x) = (i / w, i % w);
            let mut visit = |j: usize| {
                if region[j] == u32::MAX && assignment[j] == assignment[start] {
                    region[j] = id;
                    stack.push(j);
                }
            };
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
        }
    }

    let region_count = areas.len();
    let mut adjacency: Vec<std::collections::BTreeSet<u32>> =
        vec![std::collections::BTreeSet::new(); region_count];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w && region[i] != region[i + 1] {
                adjacency[region[i] as usize].insert(region[i + 1]);
                adjacency[region[i + 1] as usize].insert(region[i]);
            }
            if y + 1 < h && region[i] != region[i + w] {
                adjacency[region[i] as usize].insert(region[i + w]);
                adjacency[region[i + w] as usize].insert(region[i]);
            }
        }
    }

    // Union-find over regions; orphans merge smallest-first into the largest
    // adjacent group, so chains of fragments collapse deterministically.
    let mut parent: Vec<u32> = (0..region_count as u32).collect();
    let mut group_area = areas.clone();
    let mut group_first = first_pixel.clone();
    fn find(parent: &mut [u32], mut r: u32) -> u32 {
        while parent[r as usize] != r {
            let g = parent[parent[r as usize] as usize];
            parent[r as usize] = g;
            r = g;
        }
        r
    }

    let mut order: Vec<u32> = (0..region_count as u32).collect();
    order.sort_by_key(|&r| (areas[r as usize], first_pixel[r as usize]));
    for &r in &order {
        if (areas[r as usize] as f64) >= min_area {
            continue;
        }
        let root = find(&mut parent, r);
        let mut target: Option<(u64, std::cmp::Reverse<usize>, u32)> = None;
        for &n in &adjacency[r as usize] {
            let n_root = find(&mut parent, n);
            if n_root == root {
                continue;
            }
            let key = (
                group_area[n_root as usize],
                std::cmp::Reverse(group_first[n_root as usize]),
                n_root,
            );
            if target.map_or(true, |best| (key.0, key.1) > (best.0, best.1)) {
                target = Some(key);
            }
        }
        if let Some((_, _, n_root)) = target {
            parent[root as usize] = n_root;
            group_area[n_root as usize] += group_area[root as usize];
            group_first[n_root as usize] =
                group_first[n_root as usize].min(group_first[root as usize]);
        }
    }

    // Compact group roots in raster first-touch order.
    let mut remap = vec![u32::MAX; region_count];
    let mut next = 0u32;
    (0..assignment.len())
        .map(|i| {
            let root = find(&mut parent, region[i]) as usize;
            if remap[root] == u32::MAX {
                remap[root] = next;
                next += 1;
            }
            remap[root]
        })
        .collect()
}
