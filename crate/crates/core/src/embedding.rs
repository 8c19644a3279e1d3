//! Token embedding assembly: content pooling over (upsampled) feature maps,
//! box-mask position encoding, MLP fusion, and token truncation.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::io::LeReader;
use crate::raster::{BinaryMask, FloatMap, TokenIndexMap};
use crate::scalar::Real;

/// Per-token derived data: pixel count, normalized bounding box in
/// `<xywh>` order, and the cropped shape mask inside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenRecord {
    pub id: u32,
    pub area: u64,
    /// `(x, y, w, h)`, each normalized to `[0, 1]` by the image extent.
    pub bbox: [f64; 4],
    pub shape: BinaryMask,
}

impl TokenRecord {
    /// Extracts one record per token, in id order.
    pub fn extract_all(seg: &TokenIndexMap) -> Vec<TokenRecord> {
        let (h, w) = (seg.height() as f64, seg.width() as f64);
        let areas = seg.token_areas();
        seg.token_bboxes()
            .into_iter()
            .enumerate()
            .map(|(id, (y0, x0, y1, x1))| {
                let (bh, bw) = (y1 - y0 + 1, x1 - x0 + 1);
                let mut shape = BinaryMask::filled(bh, bw, false).expect("crop dims");
                for y in 0..bh {
                    for x in 0..bw {
                        shape.set(y, x, seg.id_at(y0 + y, x0 + x) == id as u32);
                    }
                }
                TokenRecord {
                    id: id as u32,
                    area: areas[id],
                    bbox: [
                        x0 as f64 / w,
                        y0 as f64 / h,
                        bw as f64 / w,
                        bh as f64 / h,
                    ],
                    shape,
                }
            })
            .collect()
    }
}

/// N x D matrix of per-token vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T = f32> {
    n: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> EmbeddingMatrix<T> {
    pub fn new(n: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        if n.checked_mul(dim) != Some(data.len()) {
            return Err(Error::UnsupportedImage(format!(
                "embedding data length {} does not match {n}x{dim}",
                data.len()
            )));
        }
        Ok(Self { n, dim, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Serializes as a height = N, width = D, single-channel float map,
    /// which is how embeddings travel through the FMAP format.
    pub fn to_float_map(&self) -> Result<FloatMap<T>> {
        FloatMap::new(self.n as u32, self.dim as u32, 1, self.data.clone())
    }
}

/// Interpolation used by [`upsample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    Nearest,
    Bilinear,
}

/// Resamples a feature map to the target resolution with align-corners-false
/// sampling; works for both up- and downscaling, and is the identity when
/// the dimensions already match.
pub fn upsample<T: Real>(
    features: &FloatMap<T>,
    target_h: u32,
    target_w: u32,
    mode: ResampleMode,
) -> Result<FloatMap<T>> {
    let (sh, sw, c) = (
        features.height() as usize,
        features.width() as usize,
        features.channels() as usize,
    );
    let (th, tw) = (target_h as usize, target_w as usize);
    let scale_y = sh as f64 / th as f64;
    let scale_x = sw as f64 / tw as f64;
    let src = features.data();
    let mut data = Vec::with_capacity(th * tw * c);
    for oy in 0..th {
        for ox in 0..tw {
            match mode {
                ResampleMode::Nearest => {
                    let sy = (((oy as f64 + 0.5) * scale_y).floor() as usize).min(sh - 1);
                    let sx = (((ox as f64 + 0.5) * scale_x).floor() as usize).min(sw - 1);
                    let base = (sy * sw + sx) * c;
                    data.extend_from_slice(&src[base..base + c]);
                }
                ResampleMode::Bilinear => {
                    let sy = ((oy as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (sh - 1) as f64);
                    let sx = ((ox as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (sw - 1) as f64);
                    let y0 = sy.floor() as usize;
                    let x0 = sx.floor() as usize;
                    let y1 = (y0 + 1).min(sh - 1);
                    let x1 = (x0 + 1).min(sw - 1);
                    let fy = sy - y0 as f64;
                    let fx = sx - x0 as f64;
                    for ch in 0..c {
                        let v = |y: usize, x: usize| src[(y * sw + x) * c + ch].to_f64_lossless();
                        let top = v(y0, x0) * (1.0 - fx) + v(y0, x1) * fx;
                        let bottom = v(y1, x0) * (1.0 - fx) + v(y1, x1) * fx;
                        data.push(T::from_f64_nearest(top * (1.0 - fy) + bottom * fy));
                    }
                }
            }
        }
    }
    FloatMap::new(target_h, target_w, c as u32, data)
}

/// Mean feature vector over each token's pixels: row `i` of the result is
/// the average of `features` where the segmentation id equals `i`.
pub fn content_embed<T: Real>(
    features: &FloatMap<T>,
    seg: &TokenIndexMap,
) -> Result<EmbeddingMatrix<T>> {
    if features.height() != seg.height() || features.width() != seg.width() {
        return Err(Error::DimensionMismatch {
            expected_h: seg.height(),
            expected_w: seg.width(),
            found_h: features.height(),
            found_w: features.width(),
        });
    }
    let c = features.channels() as usize;
    let n = seg.n_tokens() as usize;
    let mut sums = vec![0.0f64; n * c];
    let mut counts = vec![0u64; n];
    for (i, &id) in seg.ids().iter().enumerate() {
        let row = &mut sums[id as usize * c..(id as usize + 1) * c];
        for (ch, acc) in row.iter_mut().enumerate() {
            *acc += features.data()[i * c + ch].to_f64_lossless();
        }
        counts[id as usize] += 1;
    }
    let data = sums
        .chunks_exact(c)
        .zip(&counts)
        .flat_map(|(row, &count)| {
            row.iter()
                .map(move |&s| T::from_f64_nearest(s / count as f64))
        })
        .collect();
    EmbeddingMatrix::new(n, c, data)
}

/// Encodes each token's position as its shape mask downsampled to
/// `mask_res x mask_res` (flattened row-major) concatenated with the
/// normalized `(x, y, w, h)` bounding box; the row width is
/// `mask_res² + 4`.
///
/// Mask cells switch on by majority coverage: a cell is 1 iff at least half
/// of the source area it covers is set. The overlap accounting is exact
/// integer arithmetic, so ties resolve identically everywhere.
pub fn position_embed<T: Real>(seg: &TokenIndexMap, mask_res: u32) -> EmbeddingMatrix<T> {
    let records = TokenRecord::extract_all(seg);
    let r = mask_res as usize;
    let dim = r * r + 4;
    let mut data = Vec::with_capacity(records.len() * dim);
    for record in &records {
        let cells = downsample_majority(&record.shape, mask_res);
        data.extend(cells.bits().iter().map(|&b| if b { T::one() } else { T::zero() }));
        data.extend(record.bbox.iter().map(|&v| T::from_f64_nearest(v)));
    }
    EmbeddingMatrix::new(records.len(), dim, data).expect("row width is uniform")
}

/// Downsamples a mask to `res x res` cells; cell (i, j) covers the source
/// rectangle `[i*bh/res, (i+1)*bh/res) x [j*bw/res, (j+1)*bw/res)` and turns
/// on iff set pixels cover at least half of it. All areas are compared in
/// units of 1/res² through integers scaled by `res`.
pub fn downsample_majority(shape: &BinaryMask, res: u32) -> BinaryMask {
    let (bh, bw) = (shape.height() as u64, shape.width() as u64);
    let r = res as u64;
    let mut set_area = vec![0u64; (r * r) as usize];
    for y in 0..bh {
        for x in 0..bw {
            if !shape.get(y as u32, x as u32) {
                continue;
            }
            // Scaled by r: pixel spans [y*r, (y+1)*r), cell i spans
            // [i*bh, (i+1)*bh).
            let i_lo = y * r / bh;
            let i_hi = ((y + 1) * r - 1) / bh;
            let j_lo = x * r / bw;
            let j_hi = ((x + 1) * r - 1) / bw;
            for i in i_lo..=i_hi.min(r - 1) {
                let oy = ((y + 1) * r).min((i + 1) * bh) - (y * r).max(i * bh);
                for j in j_lo..=j_hi.min(r - 1) {
                    let ox = ((x + 1) * r).min((j + 1) * bw) - (x * r).max(j * bw);
                    set_area[(i * r + j) as usize] += oy * ox;
                }
            }
        }
    }
    let cell_area = bh * bw;
    let bits = set_area.iter().map(|&a| 2 * a >= cell_area).collect();
    BinaryMask::new(res, res, bits).expect("res x res cells")
}

/// Activation applied between MLP layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpLayer<T = f32> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// An applied (not trained) multi-layer perceptron: affine layers with the
/// activation between them and none after the last.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights<T = f32> {
    layers: Vec<MlpLayer<T>>,
    activation: Activation,
}

impl<T: Real> MlpWeights<T> {
    pub fn new(layers: Vec<MlpLayer<T>>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidMlpWeights("no layers".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.weight.len() != layer.in_dim * layer.out_dim {
                return Err(Error::InvalidMlpWeights(format!(
                    "layer {i}: weight length {} != {} x {}",
                    layer.weight.len(),
                    layer.out_dim,
                    layer.in_dim
                )));
            }
            if layer.bias.len() != layer.out_dim {
                return Err(Error::InvalidMlpWeights(format!(
                    "layer {i}: bias length {} != out dim {}",
                    layer.bias.len(),
                    layer.out_dim
                )));
            }
            if i > 0 && layers[i - 1].out_dim != layer.in_dim {
                return Err(Error::InvalidMlpWeights(format!(
                    "layer {i}: in dim {} does not chain with previous out dim {}",
                    layer.in_dim,
                    layers[i - 1].out_dim
                )));
            }
        }
        Ok(Self { layers, activation })
    }

    pub fn layers(&self) -> &[MlpLayer<T>] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("validated non-empty").out_dim
    }
}

/// Concatenates each token's content and position rows and pushes the result
/// through the MLP.
pub fn fuse<T: Real>(
    content: &EmbeddingMatrix<T>,
    position: &EmbeddingMatrix<T>,
    weights: &MlpWeights<T>,
) -> Result<EmbeddingMatrix<T>> {
    if content.n() != position.n() {
        return Err(Error::InvalidMlpWeights(format!(
            "content has {} rows but position has {}",
            content.n(),
            position.n()
        )));
    }
    let concat_dim = content.dim() + position.dim();
    if weights.in_dim() != concat_dim {
        return Err(Error::InvalidMlpWeights(format!(
            "mlp expects input width {}, concatenation has {}",
            weights.in_dim(),
            concat_dim
        )));
    }
    let out_dim = weights.out_dim();
    let mut data = Vec::with_capacity(content.n() * out_dim);
    let mut x = Vec::with_capacity(concat_dim);
    for i in 0..content.n() {
        x.clear();
        x.extend(content.row(i).iter().map(|v| v.to_f64_lossless()));
        x.extend(position.row(i).iter().map(|v| v.to_f64_lossless()));
        let mut current = x.clone();
        for (li, layer) in weights.layers().iter().enumerate() {
            let mut next = Vec::with_capacity(layer.out_dim);
            for o in 0..layer.out_dim {
                let mut acc = layer.bias[o].to_f64_lossless();
                let row = &layer.weight[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (wv, xv) in row.iter().zip(&current) {
                    acc += wv.to_f64_lossless() * xv;
                }
                next.push(acc);
            }
            let last = li + 1 == weights.layers().len();
            if !last && weights.activation() == Activation::Relu {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            current = next;
        }
        data.extend(current.into_iter().map(T::from_f64_nearest));
    }
    EmbeddingMatrix::new(content.n(), out_dim, data)
}

/// How [`truncate`] selects survivors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncateStrategy {
    /// Keep the `budget` largest tokens; drop from the small end.
    SmallestFirst,
    /// Keep a uniform random sample of `budget` tokens.
    Random { seed: u64 },
}

/// Outcome of a truncation: which ids survive and how much image area they
/// still cover.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationResult {
    /// Retained ids, ascending.
    pub retained: Vec<u32>,
    pub area_fraction: f64,
}

/// Reduces the token sequence to at most `budget` tokens.
///
/// Smallest-first keeps the `budget` largest tokens by pixel count with ties
/// broken toward lower ids; the random strategy keeps a seeded uniform
/// sample. Both report the retained ids and the fraction of image area they
/// cover.
pub fn truncate(
    seg: &TokenIndexMap,
    budget: u32,
    strategy: TruncateStrategy,
) -> Result<TruncationResult> {
    if budget == 0 {
        return Err(Error::InvalidGranularity(
            "truncation budget must be at least 1".into(),
        ));
    }
    let areas = seg.token_areas();
    let n = areas.len();
    let keep = (budget as usize).min(n);
    let mut retained: Vec<u32> = match strategy {
        TruncateStrategy::SmallestFirst => {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by_key(|&id| (std::cmp::Reverse(areas[id as usize]), id));
            order.truncate(keep);
            order
        }
        TruncateStrategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, n, keep)
                .into_iter()
                .map(|i| i as u32)
                .collect()
        }
    };
    retained.sort_unstable();
    let kept_area: u64 = retained.iter().map(|&id| areas[id as usize]).sum();
    let total: u64 = areas.iter().sum();
    Ok(TruncationResult {
        retained,
        area_fraction: kept_area as f64 / total as f64,
    })
}

pub(crate) const MLP_MAGIC: [u8; 4] = *b"MLP1";

/// Reads MLP weights: magic `MLP1` | u32-LE layer count | per layer u32-LE
/// in, u32-LE out, f32-LE weights row-major (out x in), f32-LE biases. The
/// activation is not part of the format; loaded networks use the rectifier.
pub fn read_mlp(path: impl AsRef<Path>) -> Result<MlpWeights<f32>> {
    let bytes = fs::read(path)?;
    let mut r = LeReader::new(&bytes);
    r.magic(MLP_MAGIC)?;
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers as usize);
    for _ in 0..n_layers {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let count = in_dim
            .checked_mul(out_dim)
            .ok_or_else(|| Error::InvalidMlpWeights("layer size overflow".into()))?;
        let weight = r.f32_slice(count)?;
        let bias = r.f32_slice(out_dim)?;
        layers.push(MlpLayer {
            in_dim,
            out_dim,
            weight,
            bias,
        });
    }
    MlpWeights::new(layers, Activation::Relu)
}

pub fn write_mlp(path: impl AsRef<Path>, weights: &MlpWeights<f32>) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&MLP_MAGIC);
    bytes.extend_from_slice(&(weights.layers().len() as u32).to_le_bytes());
    for layer in weights.layers() {
        bytes.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
        bytes.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
        for &v in &layer.weight {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &layer.bias {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}
