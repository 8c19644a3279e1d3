//! Intrinsic evaluation of token segmentations: boundary precision and
//! recall, token monosemanticity, and the token-size distribution.
//!
//! Ground truth enters as a boundary mask. Segmentation-style ground truth
//! is converted with [`boundaries_from_labels`](crate::raster::boundaries_from_labels)
//! using kernel size 3 before scoring.

use crate::error::{Error, Result};
use crate::raster::{
    boundaries_from_labels, clear_border, dilate, erode, BinaryMask, StructuringElement,
    TokenIndexMap,
};

/// Tolerances for boundary precision/recall, in pixels.
///
/// `exclude_border` drops the 1-pixel image-border ring from both the
/// predicted and the ground-truth boundary before scoring; the ring is an
/// artifact of the erosion border rule, not a semantic prediction, and
/// removing it from both sides keeps self-evaluation an exact fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrConfig {
    pub recall_tolerance: u32,
    pub precision_tolerance: u32,
    pub exclude_border: bool,
}

impl Default for PrConfig {
    fn default() -> Self {
        Self {
            recall_tolerance: 5,
            precision_tolerance: 5,
            exclude_border: true,
        }
    }
}

/// Erosion tolerance for the monosemanticity score, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonoConfig {
    pub erosion_tolerance: u32,
}

impl Default for MonoConfig {
    fn default() -> Self {
        Self {
            erosion_tolerance: 25,
        }
    }
}

/// All intrinsic scores of one segmentation against one ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub monosemanticity: f64,
    pub n_tokens: u32,
    /// Relative token areas, sorted descending; sums to 1.
    pub size_distribution: Vec<f64>,
}

impl MetricReport {
    pub fn compute(
        pred: &TokenIndexMap,
        gt_boundary: &BinaryMask,
        pr: &PrConfig,
        mono: &MonoConfig,
    ) -> Result<Self> {
        let (precision, recall) = boundary_pr(pred, gt_boundary, pr)?;
        let monosemanticity = monosemanticity(pred, gt_boundary, mono)?;
        Ok(Self {
            precision,
            recall,
            monosemanticity,
            n_tokens: pred.n_tokens(),
            size_distribution: size_distribution(pred),
        })
    }
}

fn check_dims(pred: &TokenIndexMap, gt: &BinaryMask) -> Result<()> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(Error::DimensionMismatch {
            expected_h: pred.height(),
            expected_w: pred.width(),
            found_h: gt.height(),
            found_w: gt.width(),
        });
    }
    Ok(())
}

/// Boundary precision and recall with pixel tolerances.
///
/// The predicted boundary is derived from `pred` with kernel size 3. Recall
/// is the fraction of ground-truth boundary pixels within
/// `recall_tolerance` of a predicted boundary pixel; precision is the
/// fraction of predicted boundary pixels within `precision_tolerance` of a
/// ground-truth pixel. Empty sides score 1 by convention (there is nothing
/// to miss).
pub fn boundary_pr(
    pred: &TokenIndexMap,
    gt_boundary: &BinaryMask,
    cfg: &PrConfig,
) -> Result<(f64, f64)> {
    check_dims(pred, gt_boundary)?;
    let mut pred_boundary = boundaries_from_labels(pred, 3);
    let mut gt = gt_boundary.clone();
    if cfg.exclude_border {
        pred_boundary = clear_border(&pred_boundary, 1);
        gt = clear_border(&gt, 1);
    }

    let gt_total = gt.count();
    let recall = if gt_total == 0 {
        1.0
    } else {
        let reach = dilate(
            &pred_boundary,
            &StructuringElement::disk(2 * cfg.recall_tolerance + 1),
        );
        gt.and(&reach)?.count() as f64 / gt_total as f64
    };

    let pred_total = pred_boundary.count();
    let precision = if pred_total == 0 {
        1.0
    } else {
        let reach = dilate(
            &gt,
            &StructuringElement::disk(2 * cfg.precision_tolerance + 1),
        );
        pred_boundary.and(&reach)?.count() as f64 / pred_total as f64
    };

    Ok((precision, recall))
}

/// Fraction of tokens whose eroded core avoids the ground-truth boundary.
///
/// Each token mask is eroded by a disk of radius `erosion_tolerance`; the
/// token counts as monosemantic iff the remaining core has empty
/// intersection with `gt_boundary`. A token thinner than twice the tolerance
/// has an empty core and counts as monosemantic vacuously.
pub fn monosemanticity(
    pred: &TokenIndexMap,
    gt_boundary: &BinaryMask,
    cfg: &MonoConfig,
) -> Result<f64> {
    check_dims(pred, gt_boundary)?;
    let se = StructuringElement::disk(2 * cfg.erosion_tolerance + 1);
    let boxes = pred.token_bboxes();
    let mut monosemantic = 0u64;

    for (id, &(y0, x0, y1, x1)) in boxes.iter().enumerate() {
        let (bh, bw) = (y1 - y0 + 1, x1 - x0 + 1);
        // Eroding the tight crop is exact: a footprint position outside the
        // bbox is never a token pixel, and out-of-image implies out-of-crop,
        // so the crop border rule agrees with the image border rule.
        let mut crop = BinaryMask::filled(bh, bw, false).expect("crop dims");
        for y in 0..bh {
            for x in 0..bw {
                crop.set(y, x, pred.id_at(y0 + y, x0 + x) == id as u32);
            }
        }
        let core = erode(&crop, &se);
        let mut crosses = false;
        'scan: for y in 0..bh {
            for x in 0..bw {
                if core.get(y, x) && gt_boundary.get(y0 + y, x0 + x) {
                    crosses = true;
                    break 'scan;
                }
            }
        }
        if !crosses {
            monosemantic += 1;
        }
    }
    Ok(monosemantic as f64 / pred.n_tokens() as f64)
}

/// Relative token areas, largest first.
pub fn size_distribution(seg: &TokenIndexMap) -> Vec<f64> {
    let total = (seg.height() as u64 * seg.width() as u64) as f64;
    let mut sizes: Vec<f64> = seg
        .token_areas()
        .into_iter()
        .map(|a| a as f64 / total)
        .collect();
    sizes.sort_by(|a, b| b.partial_cmp(a).expect("finite fractions"));
    sizes
}
