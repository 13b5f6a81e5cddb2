//! Exact AUC-ROC via the Mann-Whitney rank statistic with midranks for ties.

use crate::image::{BinaryMask, GrayImage};
use crate::metrics::MetricsError;

/// AUC from raw score/label pairs:
/// `(sum of positive ranks - n_pos*(n_pos+1)/2) / (n_pos * n_neg)`.
pub fn auc_from_scores(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the midrank.
        let midrank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                positive_rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    let nn = n_neg as f64;
    Ok((positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Exact AUC-ROC of a probability image against a binary ground truth,
/// optionally restricted to an ROI.
pub fn auc_roc(
    prob: &GrayImage,
    gt: &BinaryMask,
    roi: Option<&BinaryMask>,
) -> Result<f64, MetricsError> {
    if prob.dims() != gt.dims() {
        return Err(MetricsError::DimensionMismatch(
            prob.width(),
            prob.height(),
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
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if roi.is_some_and(|r| !r.get(x, y)) {
                continue;
            }
            scores.push(prob.get(x, y));
            labels.push(gt.get(x, y));
        }
    }
    auc_from_scores(&scores, &labels)
}
