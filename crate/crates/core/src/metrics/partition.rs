//! Thin/thick vessel partition by centerline radius (default threshold
//! 1.2 px) and the per-class Dice coefficient.

use crate::image::BinaryMask;
use crate::metrics::distance::{radius_map, squared_distance_to_sites};
use crate::metrics::skeleton::skeletonize;
use crate::metrics::MetricsError;

/// Splits a mask into thin and thick subsets.
///
/// Skeleton pixels are thin when their estimated radius (distance to the
/// nearest background pixel) is `<= tau`; every other foreground pixel takes
/// the class of its nearest skeleton pixel, with exact distance ties going to
/// thin. The two outputs partition the input. Foreground whose component was
/// annihilated by thinning (an isolated 2x2 square) classifies as thin via
/// the tie rule.
pub fn partition_thin_thick(m: &BinaryMask, tau: f64) -> (BinaryMask, BinaryMask) {
    let (w, h) = m.dims();
    if m.count_foreground() == 0 {
        return (BinaryMask::new(w, h), BinaryMask::new(w, h));
    }
    let skeleton = skeletonize(m);
    let radius = radius_map(m);
    let wu = w as usize;
    let thin_skel =
        BinaryMask::from_fn(w, h, |x, y| skeleton.get(x, y) && radius[y as usize * wu + x as usize] <= tau);
    let thick_skel = BinaryMask::from_fn(w, h, |x, y| {
        skeleton.get(x, y) && radius[y as usize * wu + x as usize] > tau
    });
    let d_thin = squared_distance_to_sites(w, h, |x, y| thin_skel.get(x, y));
    let d_thick = squared_distance_to_sites(w, h, |x, y| thick_skel.get(x, y));
    let thin = BinaryMask::from_fn(w, h, |x, y| {
        let i = y as usize * wu + x as usize;
        m.get(x, y) && d_thin[i] <= d_thick[i]
    });
    let thick = BinaryMask::from_fn(w, h, |x, y| {
        let i = y as usize * wu + x as usize;
        m.get(x, y) && d_thin[i] > d_thick[i]
    });
    (thin, thick)
}

/// Per-class Dice of prediction against ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionedDsc {
    pub dsc_thin: f64,
    pub dsc_thick: f64,
}

fn dice(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let inter = pred
        .data()
        .iter()
        .zip(gt.data())
        .filter(|(&p, &g)| p && g)
        .count();
    let denom = pred.count_foreground() + gt.count_foreground();
    if denom == 0 {
        1.0
    } else {
        2.0 * inter as f64 / denom as f64
    }
}

/// Partitions `pred` and `gt` independently at `tau` and computes the Dice
/// coefficient per class. Classes empty on both sides score 1.0.
pub fn dsc_partitioned(
    pred: &BinaryMask,
    gt: &BinaryMask,
    tau: f64,
) -> Result<PartitionedDsc, MetricsError> {
    if pred.dims() != gt.dims() {
        return Err(MetricsError::DimensionMismatch(
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height(),
        ));
    }
    let (p_thin, p_thick) = partition_thin_thick(pred, tau);
    let (t_thin, t_thick) = partition_thin_thick(gt, tau);
    Ok(PartitionedDsc {
        dsc_thin: dice(&p_thin, &t_thin),
        dsc_thick: dice(&p_thick, &t_thick),
    })
}
