//! Segmentation evaluation suite: confusion-based metrics, exact AUC-ROC,
//! error overlays, skeleton/radius analysis, thin/thick Dice, inter-domain
//! distance, and the paired t-test.

mod auc;
mod distance;
mod partition;
mod skeleton;
mod stats;

pub use auc::{auc_from_scores, auc_roc};
pub use distance::radius_map;
pub use partition::{dsc_partitioned, partition_thin_thick, PartitionedDsc};
pub use skeleton::{removable, skeletonize, ThinningPass};
pub use stats::{
    domain_inter_distance, domain_pair_count, paired_t_test, regularized_incomplete_beta,
    student_t_p_two_sided, FeatureTable, TTestResult,
};

use thiserror::Error;

use crate::image::{BinaryMask, RgbImage};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("ground truth has only one class inside the ROI")]
    SingleClass,
    #[error("need at least 2 domains, found {found}")]
    TooFewDomains { found: usize },
    #[error("feature vector for domain {domain:?} has dimension {found}, expected {expected}")]
    FeatureDimensionMismatch {
        domain: String,
        expected: usize,
        found: usize,
    },
    #[error("score lists have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 paired samples, found {found}")]
    TooFewSamples { found: usize },
    #[error("paired differences have zero variance")]
    ZeroVariance,
}

/// Pixel tallies of prediction against ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }
}

/// Counts TP/FP/FN/TN over pixels inside `roi` (all pixels when absent).
pub fn confusion(
    pred: &BinaryMask,
    gt: &BinaryMask,
    roi: Option<&BinaryMask>,
) -> Result<ConfusionCounts, MetricsError> {
    if pred.dims() != gt.dims() {
        return Err(MetricsError::DimensionMismatch(
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height(),
        ));
    }
    if let Some(r) = roi {
        if r.dims() != gt.dims() {
            return Err(MetricsError::DimensionMismatch(
                r.width(),
                r.height(),
                gt.width(),
                gt.height(),
            ));
        }
    }
    let mut c = ConfusionCounts::default();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if roi.is_some_and(|r| !r.get(x, y)) {
                continue;
            }
            match (pred.get(x, y), gt.get(x, y)) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, true) => c.false_neg += 1,
                (false, false) => c.true_neg += 1,
            }
        }
    }
    Ok(c)
}

/// Confusion-derived metrics. `None` marks an undefined value (denominator
/// zero), except DSC, which is 1.0 when prediction and truth are both empty.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BasicMetrics {
    pub dsc: Option<f64>,
    pub acc: Option<f64>,
    pub sp: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
}

pub fn basic_metrics(c: &ConfusionCounts) -> BasicMetrics {
    let (tp, fp, fneg, tn) = (
        c.true_pos as f64,
        c.false_pos as f64,
        c.false_neg as f64,
        c.true_neg as f64,
    );
    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
    BasicMetrics {
        // Both-empty prediction and truth count as perfect agreement.
        dsc: if 2.0 * tp + fp + fneg > 0.0 {
            Some(2.0 * tp / (2.0 * tp + fp + fneg))
        } else {
            Some(1.0)
        },
        acc: ratio(tp + tn, tp + fp + fneg + tn),
        sp: ratio(tn, tn + fp),
        recall: ratio(tp, tp + fneg),
        precision: ratio(tp, tp + fp),
    }
}

/// Fixed overlay palette (CSS "light" colors), frozen for golden tests.
pub const OVERLAY_TRUE_POS: [u8; 3] = [144, 238, 144];
pub const OVERLAY_FALSE_POS: [u8; 3] = [240, 128, 128];
pub const OVERLAY_FALSE_NEG: [u8; 3] = [173, 216, 230];
pub const OVERLAY_TRUE_NEG: [u8; 3] = [255, 255, 255];

fn bytes_to_rgb(rgb: [u8; 3]) -> [f64; 3] {
    [
        f64::from(rgb[0]) / 255.0,
        f64::from(rgb[1]) / 255.0,
        f64::from(rgb[2]) / 255.0,
    ]
}

/// TP/FP/FN overlay image: light green / light red / light blue over white.
pub fn error_overlay(pred: &BinaryMask, gt: &BinaryMask) -> Result<RgbImage, MetricsError> {
    if pred.dims() != gt.dims() {
        return Err(MetricsError::DimensionMismatch(
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height(),
        ));
    }
    Ok(RgbImage::from_fn(pred.width(), pred.height(), |x, y| {
        bytes_to_rgb(match (pred.get(x, y), gt.get(x, y)) {
            (true, true) => OVERLAY_TRUE_POS,
            (true, false) => OVERLAY_FALSE_POS,
            (false, true) => OVERLAY_FALSE_NEG,
            (false, false) => OVERLAY_TRUE_NEG,
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_on_identical_masks() {
        let m = BinaryMask::from_fn(4, 4, |x, y| (x + y) % 2 == 0);
        let c = confusion(&m, &m, None).unwrap();
        assert_eq!(c.false_pos, 0);
        assert_eq!(c.false_neg, 0);
        assert_eq!(c.total(), 16);
    }

    #[test]
    fn confusion_two_by_two_enumeration() {
        // pred = {(0,0),(0,1)}, gt = {(0,0),(1,0)} on a 2x2 grid.
        let pred = BinaryMask::from_fn(2, 2, |x, y| (x, y) == (0, 0) || (x, y) == (0, 1));
        let gt = BinaryMask::from_fn(2, 2, |x, y| (x, y) == (0, 0) || (x, y) == (1, 0));
        let c = confusion(&pred, &gt, None).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                true_pos: 1,
                false_pos: 1,
                false_neg: 1,
                true_neg: 1
            }
        );
    }

    #[test]
    fn confusion_empty_roi_counts_nothing() {
        let m = BinaryMask::from_fn(3, 3, |_, _| true);
        let roi = BinaryMask::new(3, 3);
        let c = confusion(&m, &m, Some(&roi)).unwrap();
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn basic_metrics_hand_case() {
        let c = ConfusionCounts {
            true_pos: 3,
            false_pos: 3,
            false_neg: 1,
            true_neg: 93,
        };
        let m = basic_metrics(&c);
        assert_eq!(m.dsc, Some(0.6));
        assert_eq!(m.precision, Some(0.5));
        assert_eq!(m.recall, Some(0.75));
        assert_eq!(m.acc, Some(0.96));
    }

    #[test]
    fn perfect_prediction_scores_one_everywhere() {
        let c = ConfusionCounts {
            true_pos: 10,
            false_pos: 0,
            false_neg: 0,
            true_neg: 90,
        };
        let m = basic_metrics(&c);
        for v in [m.dsc, m.acc, m.sp, m.recall, m.precision] {
            assert_eq!(v, Some(1.0));
        }
    }

    #[test]
    fn undefined_denominators_are_none_except_dsc() {
        let empty = ConfusionCounts::default();
        let m = basic_metrics(&empty);
        assert_eq!(m.dsc, Some(1.0));
        assert_eq!(m.acc, None);
        assert_eq!(m.sp, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.precision, None);
    }

    #[test]
    fn dsc_harmonic_identity() {
        let mut state = 0x77aa_bb11_u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let c = ConfusionCounts {
                true_pos: next() % 50 + 1,
                false_pos: next() % 50,
                false_neg: next() % 50,
                true_neg: next() % 200,
            };
            let m = basic_metrics(&c);
            let (p, r) = (m.precision.unwrap(), m.recall.unwrap());
            let dsc = m.dsc.unwrap();
            assert!((dsc - 2.0 * p * r / (p + r)).abs() < 1e-12);
            assert!(
                (m.acc.unwrap() * c.total() as f64 - (c.true_pos + c.true_neg) as f64).abs()
                    < 1e-9
            );
        }
    }

    #[test]
    fn overlay_matches_confusion_counts() {
        let pred = BinaryMask::from_fn(8, 8, |x, _| x < 5);
        let gt = BinaryMask::from_fn(8, 8, |x, y| x < 4 || y == 7);
        let overlay = error_overlay(&pred, &gt).unwrap();
        let c = confusion(&pred, &gt, None).unwrap();
        let mut counts = [0u64; 4];
        for y in 0..8 {
            for x in 0..8 {
                let px = overlay.get_pixel(x, y);
                let bytes = [
                    (px[0] * 255.0).round() as u8,
                    (px[1] * 255.0).round() as u8,
                    (px[2] * 255.0).round() as u8,
                ];
                match bytes {
                    b if b == OVERLAY_TRUE_POS => counts[0] += 1,
                    b if b == OVERLAY_FALSE_POS => counts[1] += 1,
                    b if b == OVERLAY_FALSE_NEG => counts[2] += 1,
                    b if b == OVERLAY_TRUE_NEG => counts[3] += 1,
                    other => panic!("unexpected overlay color {other:?}"),
                }
            }
        }
        assert_eq!(counts, [c.true_pos, c.false_pos, c.false_neg, c.true_neg]);
    }

    #[test]
    fn overlay_of_empty_masks_is_white() {
        let empty = BinaryMask::new(3, 3);
        let overlay = error_overlay(&empty, &empty).unwrap();
        for &v in overlay.data() {
            assert_eq!(v, 1.0);
        }
    }
}
