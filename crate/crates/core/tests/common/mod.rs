//! Shared oracles and generators for the integration suites.
//!
//! Each test binary compiles this module separately and uses a different
//! subset of it.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

use tokseg::raster::Connectivity;
use tokseg::watershed::SeedField;
use tokseg::{FloatMap, TokenIndexMap};

/// Uniform random boundary map with values in [0, 1).
pub fn random_map(rng: &mut StdRng, h: u32, w: u32) -> FloatMap<f32> {
    let data = (0..h as usize * w as usize)
        .map(|_| rng.gen_range(0.0f32..1.0))
        .collect();
    FloatMap::new(h, w, 1, data).unwrap()
}

/// Random voronoi partition: each pixel joins its nearest site (ties to the
/// lowest site index), ids compacted in raster first-touch order.
pub fn random_voronoi_seg(rng: &mut StdRng, h: u32, w: u32, sites: u32) -> TokenIndexMap {
    let sites: Vec<(i64, i64)> = (0..sites)
        .map(|_| (rng.gen_range(0..h) as i64, rng.gen_range(0..w) as i64))
        .collect();
    let raw: Vec<u32> = (0..h as usize * w as usize)
        .map(|i| {
            let (y, x) = ((i / w as usize) as i64, (i % w as usize) as i64);
            let mut best = (i64::MAX, 0u32);
            for (s, &(sy, sx)) in sites.iter().enumerate() {
                let d = (y - sy).pow(2) + (x - sx).pow(2);
                if d < best.0 {
                    best = (d, s as u32);
                }
            }
            best.1
        })
        .collect();
    let mut remap = vec![u32::MAX; sites.len()];
    let mut next = 0;
    let ids: Vec<u32> = raw
        .iter()
        .map(|&r| {
            if remap[r as usize] == u32::MAX {
                remap[r as usize] = next;
                next += 1;
            }
            remap[r as usize]
        })
        .collect();
    TokenIndexMap::new(h, w, next, ids).unwrap()
}

/// Brute-force watershed oracle: repeated global-minimum frontier expansion.
///
/// The frontier is a plain list scanned linearly for the entry with the
/// smallest (value, insertion sequence); neighbors enumerate N, S, W, E.
/// This mirrors the flood contract without a priority queue, so it checks
/// the production path through an independent mechanism.
pub fn flood_oracle(
    map: &FloatMap<f32>,
    seeds: &SeedField,
    connectivity: Connectivity,
) -> Vec<u32> {
    struct Entry {
        value: f32,
        seq: u64,
        index: usize,
        label: u32,
    }
    let (h, w) = (map.height() as i64, map.width() as i64);
    let values = map.data();
    let offsets: &[(i64, i64)] = match connectivity {
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
    };
    let mut labels = seeds.labels().to_vec();
    let mut frontier: Vec<Entry> = Vec::new();
    let mut seq = 0u64;

    let push_neighbors = |frontier: &mut Vec<Entry>,
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
                frontier.push(Entry {
                    value: values[j],
                    seq: *seq,
                    index: j,
                    label,
                });
                *seq += 1;
            }
        }
    };

    for i in 0..labels.len() {
        if labels[i] != 0 {
            push_neighbors(&mut frontier, &labels, i, labels[i], &mut seq);
        }
    }
    while !frontier.is_empty() {
        let mut best = 0;
        for (i, entry) in frontier.iter().enumerate() {
            let b = &frontier[best];
            if (entry.value, entry.seq) < (b.value, b.seq) {
                best = i;
            }
        }
        let entry = frontier.swap_remove(best);
        if labels[entry.index] != 0 {
            continue;
        }
        labels[entry.index] = entry.label;
        push_neighbors(&mut frontier, &labels, entry.index, entry.label, &mut seq);
    }
    labels.iter().map(|&l| l - 1).collect()
}

/// True iff the two labelings induce the same partition (bijective label
/// correspondence).
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
    let mut back: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Independent panoptic check: every id is in range and every id occurs.
pub fn assert_panoptic(seg: &TokenIndexMap) {
    assert!(seg.n_tokens() >= 1);
    let n = seg.n_tokens() as usize;
    let mut seen = vec![false; n];
    for &id in seg.ids() {
        assert!((id as usize) < n, "id {id} out of range {n}");
        seen[id as usize] = true;
    }
    assert!(seen.iter().all(|&s| s), "not every id occurs");
    assert_eq!(
        seg.ids().len(),
        seg.height() as usize * seg.width() as usize
    );
}
