//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success (run with `--nocapture` to see them). Tolerances are pinned in
//! the assertions.

mod common;

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{assert_panoptic, flood_oracle, random_map, random_voronoi_seg, same_partition};
use tokseg::bench::{run_bench, BenchConfig, StopCondition, TokenizerSpec};
use tokseg::embedding::{
    content_embed, fuse, position_embed, truncate, Activation, EmbeddingMatrix, MlpLayer,
    MlpWeights, TruncateStrategy,
};
use tokseg::metrics::{boundary_pr, monosemanticity, size_distribution, MonoConfig, PrConfig};
use tokseg::patch::{patch_segment, PatchConfig};
use tokseg::raster::boundaries_from_labels;
use tokseg::slic::{slic_segment, SlicConfig};
use tokseg::watershed::{epoc_segment, extract_seeds, WatershedConfig};
use tokseg::{FloatMap, RasterImage, TokenIndexMap};

#[test]
fn criterion_01_panoptic_completeness() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(101);
    let thresholds = [0.1, 0.3, 0.5, 0.7, 0.9];
    for _ in 0..1_000 {
        let h = rng.gen_range(8..=64);
        let w = rng.gen_range(8..=64);
        let map = random_map(&mut rng, h, w);
        for &t in &thresholds {
            let seg = epoc_segment(&map, &WatershedConfig::new(t).unwrap()).unwrap();
            assert_panoptic(&seg);
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() <= 60,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!("criterion 01 (panoptic completeness, 1000 maps x 5 thresholds): PASS in {elapsed:?}");
}

#[test]
fn criterion_02_watershed_oracle_equivalence() {
    let mut rng = StdRng::seed_from_u64(202);
    let thresholds = [0.3, 0.5, 0.7];
    for i in 0..200 {
        let map = random_map(&mut rng, 16, 16);
        let cfg = WatershedConfig::new(thresholds[i % thresholds.len()]).unwrap();
        let seeds = extract_seeds(&map, &cfg);
        if seeds.k_seeds() == 0 {
            continue; // zero-seed fallback is covered by criterion 1
        }
        let seg = epoc_segment(&map, &cfg).unwrap();
        let expected = flood_oracle(&map, &seeds, cfg.flood_connectivity);
        assert!(
            same_partition(seg.ids(), &expected),
            "partition mismatch on map {i}"
        );
    }
    println!("criterion 02 (flood matches global-minimum oracle on 200 maps): PASS");
}

#[test]
fn criterion_03_seed_monotonicity() {
    let mut rng = StdRng::seed_from_u64(303);
    let thresholds: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    for _ in 0..100 {
        let h = rng.gen_range(8..=32);
        let w = rng.gen_range(8..=32);
        let map = random_map(&mut rng, h, w);
        let seed_sets: Vec<Vec<bool>> = thresholds
            .iter()
            .map(|&t| {
                let seeds = extract_seeds(&map, &WatershedConfig::new(t).unwrap());
                seeds.labels().iter().map(|&l| l != 0).collect()
            })
            .collect();
        for lo in 0..thresholds.len() {
            for hi in lo..thresholds.len() {
                for i in 0..seed_sets[lo].len() {
                    assert!(
                        !seed_sets[lo][i] || seed_sets[hi][i],
                        "seed set not monotone between t={} and t={}",
                        thresholds[lo],
                        thresholds[hi]
                    );
                }
            }
        }
    }
    println!("criterion 03 (seed-set monotonicity over threshold pairs): PASS");
}

#[test]
fn criterion_04_granularity_control() {
    // Two flat basins separated by a 0.4 ridge column.
    let (h, w) = (16u32, 17u32);
    let data = (0..h * w)
        .map(|i| if i % w == 8 { 0.4f32 } else { 0.0 })
        .collect();
    let map = FloatMap::new(h, w, 1, data).unwrap();
    let fine = epoc_segment(&map, &WatershedConfig::new(0.3).unwrap()).unwrap();
    assert_eq!(fine.n_tokens(), 2, "t=0.3 must keep two basins");
    let coarse = epoc_segment(&map, &WatershedConfig::new(0.5).unwrap()).unwrap();
    assert_eq!(coarse.n_tokens(), 1, "t=0.5 must merge the basins");
    println!("criterion 04 (threshold controls granularity, N=2 then N=1): PASS");
}

#[test]
fn criterion_05_patch_contract() {
    for p in 2..=32u32 {
        let seg = patch_segment(768, 768, PatchConfig { p }).unwrap();
        assert_eq!(seg.n_tokens(), p * p, "p={p}");
        assert_panoptic(&seg);
        if 768 % p == 0 {
            let sizes = size_distribution(&seg);
            let spread = sizes[0] - sizes[sizes.len() - 1];
            assert_eq!(spread, 0.0, "divisible p={p} must be exactly uniform");
        }
    }
    println!("criterion 05 (patch yields p^2 tokens, uniform when divisible): PASS");
}

#[test]
fn criterion_06_metric_fixed_points() {
    let mut rng = StdRng::seed_from_u64(606);
    let mut cases: Vec<TokenIndexMap> = vec![
        TokenIndexMap::whole_image(64, 64).unwrap(),
        patch_segment(64, 64, PatchConfig { p: 4 }).unwrap(),
        patch_segment(96, 80, PatchConfig { p: 7 }).unwrap(),
        random_voronoi_seg(&mut rng, 64, 64, 6),
    ];
    let map = random_map(&mut rng, 48, 48);
    cases.push(epoc_segment(&map, &WatershedConfig::new(0.4).unwrap()).unwrap());

    for (i, seg) in cases.iter().enumerate() {
        let gt = boundaries_from_labels(seg, 3);
        let (p, r) = boundary_pr(seg, &gt, &PrConfig::default()).unwrap();
        assert!((p - 1.0).abs() < 1e-12, "case {i}: precision {p}");
        assert!((r - 1.0).abs() < 1e-12, "case {i}: recall {r}");
        let mono = monosemanticity(seg, &gt, &MonoConfig::default()).unwrap();
        assert_eq!(mono, 1.0, "case {i}: monosemanticity");
    }

    // A 3-pixel shift stays within the 5-pixel recall tolerance.
    let pred = column_split(64, 64, 30);
    let gt = boundaries_from_labels(&column_split(64, 64, 33), 3);
    let (_, recall) = boundary_pr(&pred, &gt, &PrConfig::default()).unwrap();
    assert!((recall - 1.0).abs() < 1e-12, "shifted recall {recall}");
    println!("criterion 06 (self-evaluation fixed points, 5px tolerance absorbs 3px shift): PASS");
}

#[test]
fn criterion_07_monosemanticity_discrimination() {
    // 512x512 scene, ground truth split into top and bottom halves.
    let gt_seg = TokenIndexMap::new(
        512,
        512,
        2,
        (0..512u32 * 512)
            .map(|i| if i / 512 < 256 { 0u32 } else { 1 })
            .collect(),
    )
    .unwrap();
    let gt = boundaries_from_labels(&gt_seg, 3);

    let fine = patch_segment(512, 512, PatchConfig { p: 32 }).unwrap();
    let fine_score = monosemanticity(&fine, &gt, &MonoConfig::default()).unwrap();
    assert!(
        fine_score >= 0.95,
        "fine patches must score >= 0.95, got {fine_score}"
    );

    let whole = TokenIndexMap::whole_image(512, 512).unwrap();
    let whole_score = monosemanticity(&whole, &gt, &MonoConfig::default()).unwrap();
    assert_eq!(whole_score, 0.0, "whole-image token must score 0");
    println!(
        "criterion 07 (monosemanticity separates fine patches {fine_score:.3} from one token {whole_score:.1}): PASS"
    );
}

#[test]
fn criterion_08_slic_sanity() {
    let colors = [
        [220u8, 40, 40],
        [40, 200, 60],
        [50, 70, 220],
        [230, 220, 60],
    ];
    let mut img = RasterImage::filled(256, 256, 3, 0).unwrap();
    for y in 0..256u32 {
        for x in 0..256u32 {
            let q = ((y >= 128) as usize) * 2 + (x >= 128) as usize;
            let i = ((y * 256 + x) * 3) as usize;
            img.data_mut()[i..i + 3].copy_from_slice(&colors[q]);
        }
    }
    let seg = slic_segment(&img, &SlicConfig::new(4)).unwrap();
    assert_eq!(seg.n_tokens(), 4);
    let mut counts = vec![[0u64; 4]; 4];
    for y in 0..256u32 {
        for x in 0..256u32 {
            let q = ((y >= 128) as usize) * 2 + (x >= 128) as usize;
            counts[seg.id_at(y, x) as usize][q] += 1;
        }
    }
    for (id, per_quadrant) in counts.iter().enumerate() {
        let total: u64 = per_quadrant.iter().sum();
        let max = *per_quadrant.iter().max().unwrap();
        assert!(
            max as f64 >= 0.9 * total as f64,
            "token {id} below 90% quadrant purity: {per_quadrant:?}"
        );
    }
    let single = slic_segment(&img, &SlicConfig::new(1)).unwrap();
    assert_eq!(single.n_tokens(), 1);
    println!("criterion 08 (slic recovers quadrants at k=4, collapses at k=1): PASS");
}

#[test]
fn criterion_09_embedding_contracts() {
    // Constant features pool to identical rows, exactly.
    let features = FloatMap::new(64, 64, 3, vec![0.7f32; 64 * 64 * 3]).unwrap();
    let seg = patch_segment(64, 64, PatchConfig { p: 4 }).unwrap();
    let content = content_embed(&features, &seg).unwrap();
    for i in 0..content.n() {
        assert_eq!(content.row(i), content.row(0), "content rows must match");
    }

    // Whole-image token: bbox (0,0,1,1) and position width mask_res^2 + 4.
    let whole = TokenIndexMap::whole_image(64, 64).unwrap();
    let position: EmbeddingMatrix<f32> = position_embed(&whole, 16);
    assert_eq!(position.dim(), 16 * 16 + 4);
    let row = position.row(0);
    assert_eq!(&row[256..], &[0.0, 0.0, 1.0, 1.0]);

    // Identity fusion reproduces the concatenation within 1e-6.
    let content = content_embed(&features, &whole).unwrap();
    let dim = content.dim() + position.dim();
    let mut weight = vec![0.0f32; dim * dim];
    for i in 0..dim {
        weight[i * dim + i] = 1.0;
    }
    let identity = MlpWeights::new(
        vec![MlpLayer {
            in_dim: dim,
            out_dim: dim,
            weight,
            bias: vec![0.0; dim],
        }],
        Activation::Relu,
    )
    .unwrap();
    let fused = fuse(&content, &position, &identity).unwrap();
    let expected: Vec<f32> = content
        .row(0)
        .iter()
        .chain(position.row(0))
        .copied()
        .collect();
    for (a, b) in fused.row(0).iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }
    println!("criterion 09 (content pooling, bbox, position width, identity fusion): PASS");
}

#[test]
fn criterion_10_truncation_robustness() {
    // Long tail: one 60% token, four 8% tokens, forty 0.2% tokens on a
    // 1000x1000 grid (600k + 4x80k + 40x2k pixels).
    let mut ids = vec![0u32; 1_000_000];
    let mut cursor = 600_000;
    for token in 1..=4u32 {
        ids[cursor..cursor + 80_000].fill(token);
        cursor += 80_000;
    }
    for token in 5..45u32 {
        ids[cursor..cursor + 2_000].fill(token);
        cursor += 2_000;
    }
    assert_eq!(cursor, 1_000_000);
    let long_tail = TokenIndexMap::new(1000, 1000, 45, ids).unwrap();
    let kept = truncate(&long_tail, 5, TruncateStrategy::SmallestFirst).unwrap();
    assert_eq!(kept.retained, vec![0, 1, 2, 3, 4]);
    assert!(
        kept.area_fraction >= 0.92,
        "long tail keeps {} of the area",
        kept.area_fraction
    );

    // Near-uniform 45 tokens: the same budget keeps only ~11% of the area.
    let uniform_ids: Vec<u32> = (0..1_000_000)
        .map(|i| (i as u64 * 45 / 1_000_000) as u32)
        .collect();
    let uniform = TokenIndexMap::new(1000, 1000, 45, uniform_ids).unwrap();
    let kept_uniform = truncate(&uniform, 5, TruncateStrategy::SmallestFirst).unwrap();
    let expected = 5.0 / 45.0;
    assert!(
        (kept_uniform.area_fraction - expected).abs() < 0.002,
        "uniform keeps {} of the area",
        kept_uniform.area_fraction
    );
    println!(
        "criterion 10 (smallest-first keeps {:.1}% long-tail vs {:.1}% uniform): PASS",
        kept.area_fraction * 100.0,
        kept_uniform.area_fraction * 100.0
    );
}

#[test]
fn criterion_11_boundary_label_generation() {
    let mut rng = StdRng::seed_from_u64(1111);
    for case in 0..50 {
        let h = rng.gen_range(8..=40);
        let w = rng.gen_range(8..=40);
        let sites = rng.gen_range(2..=6);
        let seg = random_voronoi_seg(&mut rng, h, w, sites);
        let got = boundaries_from_labels(&seg, 3);
        // Distance-to-transition oracle: a pixel is marked iff some pixel
        // within the unit disk carries a different id, or the disk leaves
        // the image (the border ring from the erosion rule).
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let mut expected = false;
                for (dy, dx) in [(0i64, 0i64), (-1, 0), (1, 0), (0, -1), (0, 1)] {
                    let (ny, nx) = (y + dy, x + dx);
                    if ny < 0 || ny >= h as i64 || nx < 0 || nx >= w as i64 {
                        expected = true;
                        break;
                    }
                    if seg.id_at(ny as u32, nx as u32) != seg.id_at(y as u32, x as u32) {
                        expected = true;
                        break;
                    }
                }
                assert_eq!(
                    got.get(y as u32, x as u32),
                    expected,
                    "case {case} at ({y},{x})"
                );
            }
        }
    }
    println!("criterion 11 (kernel-3 boundaries equal distance-to-transition oracle): PASS");
}

#[test]
fn criterion_12_throughput_harness() {
    let mut cfg = BenchConfig::new(
        TokenizerSpec::Patch(PatchConfig { p: 16 }),
        vec![1, 4],
        StopCondition::Count(24),
    );
    cfg.image_size = 768;
    let report = run_bench(&cfg).unwrap();

    // Image totals conserve the per-worker count exactly.
    for level in &report.levels {
        assert_eq!(
            level.images,
            level.workers as u64 * 24,
            "level {} must conserve image counts",
            level.workers
        );
    }

    let fps1 = report.levels[0].fps;
    let fps4 = report.levels[1].fps;
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    if cores >= 4 {
        assert!(
            fps4 >= 1.5 * fps1,
            "FPS(4) = {fps4:.2} must reach 1.5x FPS(1) = {fps1:.2} on a {cores}-core host"
        );
        println!(
            "criterion 12 (throughput scaling {:.2}x on {cores} cores, counts conserved): PASS",
            fps4 / fps1
        );
    } else {
        println!(
            "criterion 12 (counts conserved; scaling check needs >= 4 cores, host has {cores}; measured FPS(4)/FPS(1) = {:.2}): PASS (scaling bound not applicable)",
            fps4 / fps1
        );
    }
}

fn column_split(h: u32, w: u32, col: u32) -> TokenIndexMap {
    let ids = (0..h * w)
        .map(|i| if i % w < col { 0 } else { 1 })
        .collect();
    TokenIndexMap::new(h, w, 2, ids).unwrap()
}
