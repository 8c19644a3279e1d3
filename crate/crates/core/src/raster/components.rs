//! Connected component labelling of binary masks.

use super::BinaryMask;

/// Whether diagonal neighbors count as connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Per-pixel component labels: 0 is background, components are `1..=count`
/// in raster-scan first-touch order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    height: u32,
    width: u32,
    labels: Vec<u32>,
    count: u32,
}

impl LabelField {
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn label_at(&self, y: u32, x: u32) -> u32 {
        self.labels[y as usize * self.width as usize + x as usize]
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        Self { parent: Vec::new() }
    }

    fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller root so provisional ids stay raster-ordered.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Labels connected components of set pixels. Two set pixels share a label
/// iff a path of set pixels joins them under the given connectivity; labels
/// are assigned in raster-scan first-touch order starting at 1.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelField {
    let (h, w) = (mask.height() as usize, mask.width() as usize);
    let bits = mask.bits();
    let mut provisional = vec![0u32; h * w];
    let mut forest = UnionFind::new();

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !bits[i] {
                continue;
            }
            // Scan already-visited neighbors: W, N, and for 8-connectivity
            // NW and NE.
            let mut neighbor: Option<u32> = None;
            let mut merge = |forest: &mut UnionFind, label: u32| match neighbor {
                None => neighbor = Some(label),
                Some(first) => forest.union(first, label),
            };
            if x > 0 && bits[i - 1] {
                merge(&mut forest, provisional[i - 1] - 1);
            }
            if y > 0 && bits[i - w] {
                merge(&mut forest, provisional[i - w] - 1);
            }
            if connectivity == Connectivity::Eight && y > 0 {
                if x > 0 && bits[i - w - 1] {
                    merge(&mut forest, provisional[i - w - 1] - 1);
                }
                if x + 1 < w && bits[i - w + 1] {
                    merge(&mut forest, provisional[i - w + 1] - 1);
                }
            }
            provisional[i] = match neighbor {
                Some(label) => label + 1,
                None => forest.make_set() + 1,
            };
        }
    }

    // Renumber roots in raster-scan first-touch order.
    let mut root_to_label = vec![0u32; forest.parent.len()];
    let mut labels = vec![0u32; h * w];
    let mut count = 0u32;
    for i in 0..h * w {
        if provisional[i] == 0 {
            continue;
        }
        let root = forest.find(provisional[i] - 1) as usize;
        if root_to_label[root] == 0 {
            count += 1;
            root_to_label[root] = count;
        }
        labels[i] = root_to_label[root];
    }

    LabelField {
        height: mask.height(),
        width: mask.width(),
        labels,
        count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    /// BFS flood-fill oracle, independent of the union-find path.
    pub(crate) fn flood_fill_oracle(mask: &BinaryMask, connectivity: Connectivity) -> LabelField {
        let (h, w) = (mask.height() as i64, mask.width() as i64);
        let mut labels = vec![0u32; (h * w) as usize];
        let mut count = 0u32;
        let offsets: &[(i64, i64)] = match connectivity {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        };
        for start in 0..(h * w) as usize {
            if !mask.bits()[start] || labels[start] != 0 {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([start]);
            labels[start] = count;
            while let Some(i) = queue.pop_front() {
                let (y, x) = (i as i64 / w, i as i64 % w);
                for &(dy, dx) in offsets {
                    let (ny, nx) = (y + dy, x + dx);
                    if ny < 0 || ny >= h || nx < 0 || nx >= w {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if mask.bits()[j] && labels[j] == 0 {
                        labels[j] = count;
                        queue.push_back(j);
                    }
                }
            }
        }
        LabelField {
            height: mask.height(),
            width: mask.width(),
            labels,
            count,
        }
    }

    #[test]
    fn diagonal_pixels_connectivity() {
        let mut mask = BinaryMask::filled(3, 3, false).unwrap();
        mask.set(0, 0, true);
        mask.set(1, 1, true);
        assert_eq!(connected_components(&mask, Connectivity::Four).count(), 2);
        assert_eq!(connected_components(&mask, Connectivity::Eight).count(), 1);
    }

    #[test]
    fn empty_mask_has_no_components() {
        let mask = BinaryMask::filled(4, 4, false).unwrap();
        let field = connected_components(&mask, Connectivity::Four);
        assert_eq!(field.count(), 0);
        assert!(field.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn labels_are_first_touch_ordered() {
        // Two components; the one touched first in raster order gets label 1.
        let bits = vec![
            false, true, false, //
            false, false, false, //
            true, false, false,
        ];
        let mask = BinaryMask::new(3, 3, bits).unwrap();
        let field = connected_components(&mask, Connectivity::Four);
        assert_eq!(field.label_at(0, 1), 1);
        assert_eq!(field.label_at(2, 0), 2);
    }

    #[test]
    fn exhaustive_4x4_matches_flood_fill_oracle() {
        for bits_word in 0u32..(1 << 16) {
            let bits: Vec<bool> = (0..16).map(|i| bits_word >> i & 1 == 1).collect();
            let mask = BinaryMask::new(4, 4, bits).unwrap();
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let got = connected_components(&mask, conn);
                let want = flood_fill_oracle(&mask, conn);
                assert_eq!(got, want, "mask {bits_word:#06x} {conn:?}");
            }
        }
    }
}
