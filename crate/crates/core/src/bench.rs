//! Throughput harness: scale isolated tokenizer workers and report
//! frames per second at each level.
//!
//! Workers share nothing mutable. Each level spawns its workers behind a
//! start barrier, lets every worker loop batches through its own tokenizer
//! until the stop condition, and collects per-worker image counts over a
//! result channel. Timing uses the monotonic clock from barrier release to
//! the last worker finishing.

use std::path::PathBuf;
use std::sync::{mpsc, Arc, Barrier};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{upsample, ResampleMode};
use crate::error::{Error, Result};
use crate::patch::{patch_segment, PatchConfig};
use crate::raster::{read_fmap, read_png, read_png_float, FloatMap, RasterImage, TokenIndexMap};
use crate::slic::{slic_segment, SlicConfig};
use crate::watershed::{epoc_segment, WatershedConfig};

/// Which tokenizer the workers run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TokenizerSpec {
    Patch(PatchConfig),
    Slic(SlicConfig),
    Epoc(WatershedConfig),
}

/// When a worker stops processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCondition {
    /// Each worker processes exactly this many images.
    Count(u64),
    /// Each worker stops after the first batch that ends past this wall time.
    Duration(Duration),
}

/// Where benchmark inputs come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    /// Deterministic generated pool: smooth random images for patch/slic,
    /// smooth random boundary maps for the watershed.
    Synthetic { pool: u32 },
    /// Every readable input file in a directory (`.png` and, for the
    /// watershed, `.fmap`).
    Directory(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub tokenizer: TokenizerSpec,
    /// Parallel-worker levels to measure, ascending.
    pub worker_counts: Vec<u32>,
    /// Images per batch; the paper's protocol batches 10.
    pub batch_size: u32,
    pub stop: StopCondition,
    pub input: InputSource,
    /// Side length of synthetic inputs.
    pub image_size: u32,
}

impl BenchConfig {
    pub fn new(tokenizer: TokenizerSpec, worker_counts: Vec<u32>, stop: StopCondition) -> Self {
        Self {
            tokenizer,
            worker_counts,
            batch_size: 10,
            stop,
            input: InputSource::Synthetic { pool: 4 },
            image_size: 768,
        }
    }
}

/// One measured worker level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub workers: u32,
    pub seconds: f64,
    pub images: u64,
    pub fps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub levels: Vec<LevelReport>,
}

impl BenchReport {
    pub fn peak_fps(&self) -> f64 {
        self.levels.iter().fold(0.0, |acc, l| acc.max(l.fps))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("workers,seconds,images,fps\n");
        for level in &self.levels {
            out.push_str(&format!(
                "{},{:.6},{},{:.3}\n",
                level.workers, level.seconds, level.images, level.fps
            ));
        }
        out
    }
}

enum Inputs {
    Images(Vec<Arc<RasterImage>>),
    Maps(Vec<Arc<FloatMap<f32>>>),
}

fn tokenize_one(spec: &TokenizerSpec, inputs: &Inputs, index: usize) -> Result<TokenIndexMap> {
    match (spec, inputs) {
        (TokenizerSpec::Patch(cfg), Inputs::Images(imgs)) => {
            let img = &imgs[index % imgs.len()];
            patch_segment(img.height(), img.width(), *cfg)
        }
        (TokenizerSpec::Slic(cfg), Inputs::Images(imgs)) => {
            slic_segment(&imgs[index % imgs.len()], cfg)
        }
        (TokenizerSpec::Epoc(cfg), Inputs::Maps(maps)) => {
            epoc_segment(maps[index % maps.len()].as_ref(), cfg)
        }
        _ => Err(Error::Bench("input kind does not match tokenizer".into())),
    }
}

fn prepare_inputs(cfg: &BenchConfig) -> Result<Inputs> {
    let wants_maps = matches!(cfg.tokenizer, TokenizerSpec::Epoc(_));
    match &cfg.input {
        InputSource::Synthetic { pool } => {
            let pool = (*pool).max(1);
            if wants_maps {
                let maps = (0..pool)
                    .map(|i| Ok(Arc::new(synthetic_boundary_map(cfg.image_size, i as u64)?)))
                    .collect::<Result<_>>()?;
                Ok(Inputs::Maps(maps))
            } else {
                let imgs = (0..pool)
                    .map(|i| Ok(Arc::new(synthetic_image(cfg.image_size, i as u64)?)))
                    .collect::<Result<_>>()?;
                Ok(Inputs::Images(imgs))
            }
        }
        InputSource::Directory(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
                    ext.eq_ignore_ascii_case("png") || (wants_maps && ext.eq_ignore_ascii_case("fmap"))
                })
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::Bench(format!(
                    "no usable inputs in {}",
                    dir.display()
                )));
            }
            if wants_maps {
                let maps = paths
                    .iter()
                    .map(|p| {
                        let map = if p.extension().and_then(|e| e.to_str()) == Some("fmap") {
                            read_fmap(p)?
                        } else {
                            read_png_float(p)?
                        };
                        Ok(Arc::new(map))
                    })
                    .collect::<Result<_>>()?;
                Ok(Inputs::Maps(maps))
            } else {
                let imgs = paths
                    .iter()
                    .map(|p| Ok(Arc::new(read_png(p)?)))
                    .collect::<Result<_>>()?;
                Ok(Inputs::Images(imgs))
            }
        }
    }
}

/// Runs every worker level in the config and reports wall-clock seconds,
/// image totals, and FPS per level.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.worker_counts.is_empty() {
        return Err(Error::Bench("worker_counts must be non-empty".into()));
    }
    if cfg.worker_counts.windows(2).any(|w| w[0] > w[1]) || cfg.worker_counts.contains(&0) {
        return Err(Error::Bench(
            "worker_counts must be ascending and positive".into(),
        ));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Bench("batch_size must be at least 1".into()));
    }
    let inputs = Arc::new(prepare_inputs(cfg)?);
    // One warmup call surfaces tokenizer configuration errors before any
    // thread spawns and keeps the first timed batch honest.
    std::hint::black_box(tokenize_one(&cfg.tokenizer, &inputs, 0)?);

    let mut levels = Vec::with_capacity(cfg.worker_counts.len());
    for &workers in &cfg.worker_counts {
        levels.push(run_level(cfg, Arc::clone(&inputs), workers)?);
    }
    Ok(BenchReport { levels })
}

fn run_level(cfg: &BenchConfig, inputs: Arc<Inputs>, workers: u32) -> Result<LevelReport> {
    let barrier = Arc::new(Barrier::new(workers as usize + 1));
    let (tx, rx) = mpsc::channel::<Result<u64>>();
    let mut handles = Vec::with_capacity(workers as usize);

    for worker_id in 0..workers {
        let barrier = Arc::clone(&barrier);
        let inputs = Arc::clone(&inputs);
        let tx = tx.clone();
        let spec = cfg.tokenizer;
        let batch = cfg.batch_size as u64;
        let stop = cfg.stop;
        handles.push(std::thread::spawn(move || {
            barrier.wait();
            let started = Instant::now();
            let mut processed: u64 = 0;
            let mut cursor = worker_id as usize * 17; // stagger pool access
            let outcome = loop {
                let remaining = match stop {
                    StopCondition::Count(n) => {
                        if processed >= n {
                            break Ok(processed);
                        }
                        (n - processed).min(batch)
                    }
                    StopCondition::Duration(limit) => {
                        if started.elapsed() >= limit {
                            break Ok(processed);
                        }
                        batch
                    }
                };
                let mut failed = None;
                for _ in 0..remaining {
                    match tokenize_one(&spec, &inputs, cursor) {
                        Ok(seg) => {
                            std::hint::black_box(seg.n_tokens());
                        }
                        Err(e) => {
                            failed = Some(e);
                            break;
                        }
                    }
                    cursor += 1;
                    processed += 1;
                }
                if let Some(e) = failed {
                    break Err(e);
                }
            };
            let _ = tx.send(outcome);
        }));
    }
    drop(tx);

    barrier.wait();
    let start = Instant::now();
    let mut images: u64 = 0;
    let mut first_error = None;
    for outcome in rx.iter() {
        match outcome {
            Ok(count) => images += count,
            Err(e) => first_error = first_error.or(Some(e)),
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    for handle in handles {
        handle.join().map_err(|_| Error::Bench("worker panicked".into()))?;
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    let fps = if seconds > 0.0 {
        images as f64 / seconds
    } else {
        f64::INFINITY
    };
    Ok(LevelReport {
        workers,
        seconds,
        images,
        fps,
    })
}

/// Smooth synthetic RGB image: coarse random color lattice, bilinearly
/// interpolated to full resolution. Deterministic per seed.
pub fn synthetic_image(size: u32, seed: u64) -> Result<RasterImage> {
    let field = smooth_field(size, 3, seed)?;
    let data = field
        .data()
        .chunks_exact(3)
        .flat_map(|v| {
            [
                (v[0] * 255.0).round() as u8,
                (v[1] * 255.0).round() as u8,
                (v[2] * 255.0).round() as u8,
            ]
        })
        .collect();
    RasterImage::new(size, size, 3, data)
}

/// Smooth synthetic boundary probability map in [0, 1].
pub fn synthetic_boundary_map(size: u32, seed: u64) -> Result<FloatMap<f32>> {
    smooth_field(size, 1, seed)
}

fn smooth_field(size: u32, channels: u32, seed: u64) -> Result<FloatMap<f32>> {
    const LATTICE: u32 = 9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = FloatMap::new(
        LATTICE,
        LATTICE,
        channels,
        (0..LATTICE * LATTICE * channels)
            .map(|_| rng.gen_range(0.0f32..=1.0))
            .collect(),
    )?;
    upsample(&coarse, size, size, ResampleMode::Bilinear)
}
