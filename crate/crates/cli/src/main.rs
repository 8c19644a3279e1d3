//! Command-line frontend for the tokenization library.
//!
//! Machine-readable output is CSV on stdout (header line plus data rows);
//! human summaries go to stderr. Exit codes: 0 success, 1 validation or
//! usage error, 2 i/o error.

mod viz;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use tokseg::bench::{run_bench, BenchConfig, InputSource, StopCondition, TokenizerSpec};
use tokseg::embedding::{
    content_embed, fuse, position_embed, read_mlp, truncate, upsample, EmbeddingMatrix,
    ResampleMode, TruncateStrategy,
};
use tokseg::metrics::{boundary_pr, monosemanticity, size_distribution, MonoConfig, PrConfig};
use tokseg::patch::{patch_segment, PatchConfig};
use tokseg::raster::{
    boundaries_from_labels, read_fmap, read_png, read_png_float, read_seg, write_fmap, write_png,
    write_seg,
};
use tokseg::slic::{slic_segment, SlicConfig};
use tokseg::watershed::{epoc_segment, gradient_boundary, WatershedConfig};
use tokseg::{BinaryMask, FloatMap};

#[derive(Parser)]
#[command(
    name = "tokseg",
    about = "Subobject image tokenization: segment, embed, evaluate, benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment an image (or boundary map) into a token index map.
    Tokenize(TokenizeArgs),
    /// Estimate a boundary probability map from an image.
    Boundary(BoundaryArgs),
    /// Score a segmentation against ground truth.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Assemble per-token embedding vectors.
    Embed(EmbedArgs),
    /// Drop tokens down to a budget and report retained coverage.
    Truncate(TruncateArgs),
    /// Measure tokenizer throughput across worker counts.
    Bench(BenchArgs),
    /// Render a segmentation as a color image.
    Visualize(VisualizeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Patch,
    Slic,
    Epoc,
}

#[derive(Args)]
struct TokenizeArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Input image (PNG); required for patch and slic.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Boundary probability map (.fmap or grayscale PNG); required for epoc.
    #[arg(long)]
    boundary: Option<PathBuf>,
    /// Patches per side (patch method).
    #[arg(long)]
    p: Option<u32>,
    /// Target cluster count (slic method).
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 10.0)]
    compactness: f64,
    #[arg(long, default_value_t = 10)]
    iters: u32,
    /// Seed threshold in (0, 1) (epoc method).
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long)]
    input: PathBuf,
    /// Box-blur radius applied before the gradient, in pixels.
    #[arg(long, default_value_t = 1)]
    radius: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// Boundary precision and recall.
    Pr(MetricsArgs),
    /// Token monosemanticity score.
    Mono(MetricsArgs),
    /// Token-size distribution, largest first.
    Sizes(MetricsArgs),
}

#[derive(Args)]
struct MetricsArgs {
    /// Predicted segmentation (.seg).
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth: a .seg segmentation (converted to boundaries with
    /// kernel 3) or a PNG boundary mask (pixels >= 0.5 after normalization).
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    tol_recall: u32,
    #[arg(long, default_value_t = 5)]
    tol_precision: u32,
    #[arg(long, default_value_t = 25)]
    tol_mono: u32,
    /// Keep the 1-pixel image-border ring in both boundaries.
    #[arg(long)]
    include_border: bool,
}

#[derive(Args)]
struct EmbedArgs {
    /// Feature map (.fmap); upsampled bilinearly to the segmentation size.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    seg: PathBuf,
    #[arg(long, default_value_t = 16)]
    mask_res: u32,
    /// MLP weights (.mlp1). Without them the output rows are the raw
    /// concatenation of content and position.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Smallest,
    Random,
}

#[derive(Args)]
struct TruncateArgs {
    #[arg(long)]
    seg: PathBuf,
    #[arg(long)]
    budget: u32,
    #[arg(long, value_enum, default_value_t = Strategy::Smallest)]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 10.0)]
    compactness: f64,
    #[arg(long, default_value_t = 10)]
    iters: u32,
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated worker levels, ascending (e.g. 1,2,4).
    #[arg(long, value_delimiter = ',')]
    workers: Vec<u32>,
    #[arg(long, default_value_t = 10)]
    batch: u32,
    /// Images each worker processes.
    #[arg(long)]
    count: u64,
    /// Synthetic input side length.
    #[arg(long, default_value_t = 768)]
    size: u32,
    /// Read inputs from a directory instead of generating them.
    #[arg(long)]
    input_dir: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VisualizeArgs {
    #[arg(long)]
    seg: PathBuf,
    /// Optional image to blend under the token colors.
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 2 for environment failures (missing/corrupt files), 1 for invalid inputs.
fn exit_code_for(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<tokseg::Error>() {
            return if err.is_io() { 2 } else { 1 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Tokenize(args) => cmd_tokenize(args),
        Command::Boundary(args) => cmd_boundary(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Truncate(args) => cmd_truncate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Visualize(args) => cmd_visualize(args),
    }
}

/// Reads a boundary map from either an FMAP file or a grayscale PNG,
/// sniffing the magic bytes rather than trusting the extension.
fn load_boundary_map(path: &Path) -> anyhow::Result<FloatMap<f32>> {
    let head = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if head.starts_with(b"FMP1") {
        Ok(read_fmap(path)?)
    } else {
        Ok(read_png_float(path)?)
    }
}

fn cmd_tokenize(args: TokenizeArgs) -> anyhow::Result<()> {
    let seg = match args.method {
        Method::Patch => {
            let p = args.p.context("--method patch requires --p")?;
            let input = args.input.context("--method patch requires --input")?;
            let img = read_png(&input)?;
            patch_segment(img.height(), img.width(), PatchConfig { p })?
        }
        Method::Slic => {
            let k = args.k.context("--method slic requires --k")?;
            let input = args.input.context("--method slic requires --input")?;
            let img = read_png(&input)?;
            let cfg = SlicConfig {
                k,
                compactness: args.compactness,
                iterations: args.iters,
                enforce_connectivity: true,
            };
            slic_segment(&img, &cfg)?
        }
        Method::Epoc => {
            let t = args.t.context("--method epoc requires --t")?;
            let boundary = args
                .boundary
                .context("--method epoc requires --boundary")?;
            let map = load_boundary_map(&boundary)?;
            epoc_segment(&map, &WatershedConfig::new(t)?)?
        }
    };
    write_seg(&args.out, &seg)?;
    eprintln!(
        "wrote {} tokens over {}x{} to {}",
        seg.n_tokens(),
        seg.height(),
        seg.width(),
        args.out.display()
    );
    Ok(())
}

fn cmd_boundary(args: BoundaryArgs) -> anyhow::Result<()> {
    let img = read_png(&args.input)?;
    let map: FloatMap<f32> = gradient_boundary(&img, args.radius);
    write_fmap(&args.out, &map)?;
    eprintln!(
        "wrote {}x{} boundary map to {}",
        map.height(),
        map.width(),
        args.out.display()
    );
    Ok(())
}

/// Ground truth arrives either as a segmentation (boundaries derived with
/// kernel 3) or as a mask image (normalized samples >= 0.5 count as set).
fn load_gt_boundary(path: &Path) -> anyhow::Result<BinaryMask> {
    let head = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if head.starts_with(b"SEG1") {
        let seg = read_seg(path)?;
        Ok(boundaries_from_labels(&seg, 3))
    } else {
        let map = read_png_float(path)?;
        if map.channels() != 1 {
            bail!("ground-truth mask PNG must be grayscale");
        }
        let bits = map.data().iter().map(|&v| v >= 0.5).collect();
        Ok(BinaryMask::new(map.height(), map.width(), bits)?)
    }
}

fn cmd_metrics(command: MetricsCommand) -> anyhow::Result<()> {
    match command {
        MetricsCommand::Pr(args) => {
            let pred = read_seg(&args.pred)?;
            let gt = load_gt_boundary(&args.gt.context("metrics pr requires --gt")?)?;
            let cfg = PrConfig {
                recall_tolerance: args.tol_recall,
                precision_tolerance: args.tol_precision,
                exclude_border: !args.include_border,
            };
            let (precision, recall) = boundary_pr(&pred, &gt, &cfg)?;
            println!("precision,recall");
            println!("{precision},{recall}");
            eprintln!(
                "precision {precision:.4}, recall {recall:.4} over {} tokens",
                pred.n_tokens()
            );
        }
        MetricsCommand::Mono(args) => {
            let pred = read_seg(&args.pred)?;
            let gt = load_gt_boundary(&args.gt.context("metrics mono requires --gt")?)?;
            let cfg = MonoConfig {
                erosion_tolerance: args.tol_mono,
            };
            let score = monosemanticity(&pred, &gt, &cfg)?;
            println!("monosemanticity");
            println!("{score}");
            eprintln!("monosemanticity {score:.4} over {} tokens", pred.n_tokens());
        }
        MetricsCommand::Sizes(args) => {
            let pred = read_seg(&args.pred)?;
            let sizes = size_distribution(&pred);
            println!("rank,area_fraction");
            for (rank, size) in sizes.iter().enumerate() {
                println!("{rank},{size}");
            }
            eprintln!("{} tokens, largest {:.4}", sizes.len(), sizes[0]);
        }
    }
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> anyhow::Result<()> {
    let seg = read_seg(&args.seg)?;
    let features = read_fmap(&args.features)?;
    let features = upsample(&features, seg.height(), seg.width(), ResampleMode::Bilinear)?;
    let content = content_embed(&features, &seg)?;
    let position: EmbeddingMatrix<f32> = position_embed(&seg, args.mask_res);
    let output = match &args.weights {
        Some(path) => fuse(&content, &position, &read_mlp(path)?)?,
        None => {
            let dim = content.dim() + position.dim();
            let mut data = Vec::with_capacity(content.n() * dim);
            for i in 0..content.n() {
                data.extend_from_slice(content.row(i));
                data.extend_from_slice(position.row(i));
            }
            EmbeddingMatrix::new(content.n(), dim, data)?
        }
    };
    write_fmap(&args.out, &output.to_float_map()?)?;
    eprintln!(
        "wrote {}x{} embedding matrix to {}",
        output.n(),
        output.dim(),
        args.out.display()
    );
    Ok(())
}

fn cmd_truncate(args: TruncateArgs) -> anyhow::Result<()> {
    let seg = read_seg(&args.seg)?;
    let strategy = match args.strategy {
        Strategy::Smallest => TruncateStrategy::SmallestFirst,
        Strategy::Random => TruncateStrategy::Random { seed: args.seed },
    };
    let result = truncate(&seg, args.budget, strategy)?;
    let ids = result
        .retained
        .iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join(";");
    println!("retained_ids,area_fraction");
    println!("{ids},{}", result.area_fraction);
    eprintln!(
        "retained {}/{} tokens covering {:.2}% of the image",
        result.retained.len(),
        seg.n_tokens(),
        result.area_fraction * 100.0
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let tokenizer = match args.method {
        Method::Patch => TokenizerSpec::Patch(PatchConfig {
            p: args.p.context("--method patch requires --p")?,
        }),
        Method::Slic => TokenizerSpec::Slic(SlicConfig {
            k: args.k.context("--method slic requires --k")?,
            compactness: args.compactness,
            iterations: args.iters,
            enforce_connectivity: true,
        }),
        Method::Epoc => TokenizerSpec::Epoc(WatershedConfig::new(
            args.t.context("--method epoc requires --t")?,
        )?),
    };
    let mut cfg = BenchConfig::new(tokenizer, args.workers, StopCondition::Count(args.count));
    cfg.batch_size = args.batch;
    cfg.image_size = args.size;
    if let Some(dir) = args.input_dir {
        cfg.input = InputSource::Directory(dir);
    }
    let report = run_bench(&cfg)?;
    fs::write(&args.out, report.to_csv())?;
    for level in &report.levels {
        eprintln!(
            "workers {:>3}: {:>8} images in {:>8.3}s -> {:.2} fps",
            level.workers, level.images, level.seconds, level.fps
        );
    }
    eprintln!(
        "peak {:.2} fps; report written to {}",
        report.peak_fps(),
        args.out.display()
    );
    Ok(())
}

fn cmd_visualize(args: VisualizeArgs) -> anyhow::Result<()> {
    let seg = read_seg(&args.seg)?;
    let base = match &args.base {
        Some(path) => Some(read_png(path)?),
        None => None,
    };
    let img = viz::visualize(&seg, base.as_ref(), args.alpha)?;
    write_png(&args.out, &img)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}
