//! Forward evaluation of the closed-form training losses.
//!
//! Everything here follows the negative-log-likelihood convention: all losses
//! are non-negative and lower is better. The [`as_printed`] submodule exposes
//! the alternative sign convention for auditing.
//!
//! Gradient-penalty terms need discriminator gradients and are accepted as
//! precomputed scalars.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{BinaryMask, GrayImage, RgbImage};

/// Probabilities are clamped into `[SCORE_EPS, 1 - SCORE_EPS]` at ingestion
/// so logs stay finite.
pub const SCORE_EPS: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("dimension mismatch: {left} vs {right} elements")]
    DimensionMismatch { left: usize, right: usize },
    #[error("score map list is empty")]
    EmptyList,
}

/// Flat map of probability scores, clamped away from 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap {
    values: Vec<f64>,
}

impl ScoreMap {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values: values
                .into_iter()
                .map(|v| v.clamp(SCORE_EPS, 1.0 - SCORE_EPS))
                .collect(),
        }
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self::new(img.data().to_vec())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Loss term weights. Defaults: `lambda_l1 = 100`, `lambda_adv = 0.2`,
/// `lambda_1 = 0.3`, `lambda_gp = 10`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_l1: f64,
    pub lambda_adv: f64,
    pub lambda_1: f64,
    pub lambda_gp: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_l1: 100.0,
            lambda_adv: 0.2,
            lambda_1: 0.3,
            lambda_gp: 10.0,
        }
    }
}

/// Mean absolute difference between a generated and a real image.
pub fn l1_consistency(gen: &RgbImage, real: &RgbImage) -> Result<f64, LossError> {
    if gen.data().len() != real.data().len() {
        return Err(LossError::DimensionMismatch {
            left: gen.data().len(),
            right: real.data().len(),
        });
    }
    let n = gen.data().len() as f64;
    Ok(gen
        .data()
        .iter()
        .zip(real.data())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n)
}

/// Non-saturating generator adversarial loss `-E[log D(G(M))]`.
pub fn adv_generator(d_scores: &ScoreMap) -> f64 {
    -d_scores.values.iter().map(|v| v.ln()).sum::<f64>() / d_scores.len() as f64
}

/// Total generator loss:
/// `lambda_l1 * l1 + lambda_adv * adv_paired + lambda_adv * adv_unpaired`.
pub fn generator_total(l1: f64, adv_paired: f64, adv_unpaired: f64, w: &LossWeights) -> f64 {
    w.lambda_l1 * l1 + w.lambda_adv * adv_paired + w.lambda_adv * adv_unpaired
}

/// The three discriminator terms, each as a negative log likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscriminatorComponents {
    pub d_real: f64,
    pub d_fake_paired: f64,
    pub d_fake_unpaired: f64,
}

fn mean_neg_log(scores: &ScoreMap) -> f64 {
    -scores.values.iter().map(|v| v.ln()).sum::<f64>() / scores.len() as f64
}

fn mean_neg_log1m(scores: &ScoreMap) -> f64 {
    -scores.values.iter().map(|v| (1.0 - v).ln()).sum::<f64>() / scores.len() as f64
}

/// `d_real = -E[log D(real)]`, `d_fake_* = -E[log(1 - D(fake))]`.
pub fn discriminator_components(
    real_scores: &ScoreMap,
    fake_paired_scores: &ScoreMap,
    fake_unpaired_scores: &ScoreMap,
) -> DiscriminatorComponents {
    DiscriminatorComponents {
        d_real: mean_neg_log(real_scores),
        d_fake_paired: mean_neg_log1m(fake_paired_scores),
        d_fake_unpaired: mean_neg_log1m(fake_unpaired_scores),
    }
}

/// Total discriminator loss:
/// `lambda_1 * (d_real + d_fake_paired + d_fake_unpaired)
///  + lambda_gp * (gp_paired + gp_unpaired)`.
pub fn discriminator_total(
    components: &DiscriminatorComponents,
    gp_paired: f64,
    gp_unpaired: f64,
    w: &LossWeights,
) -> f64 {
    w.lambda_1 * (components.d_real + components.d_fake_paired + components.d_fake_unpaired)
        + w.lambda_gp * (gp_paired + gp_unpaired)
}

/// Multi-scale discriminator aggregation: the sum of per-scale score means.
pub fn multiscale_aggregate(score_maps: &[ScoreMap]) -> Result<f64, LossError> {
    if score_maps.is_empty() {
        return Err(LossError::EmptyList);
    }
    Ok(score_maps.iter().map(ScoreMap::mean).sum())
}

/// Pixel-wise binary cross-entropy `-mean(y log p + (1-y) log(1-p))`.
pub fn bce_segmentation(pred: &ScoreMap, gt: &BinaryMask) -> Result<f64, LossError> {
    if pred.len() != gt.data().len() {
        return Err(LossError::DimensionMismatch {
            left: pred.len(),
            right: gt.data().len(),
        });
    }
    let n = pred.len() as f64;
    Ok(-pred
        .values
        .iter()
        .zip(gt.data())
        .map(|(&p, &y)| if y { p.ln() } else { (1.0 - p).ln() })
        .sum::<f64>()
        / n)
}

/// Analytic gradient of [`bce_segmentation`] with respect to each score:
/// `(p - y) / (p (1 - p)) / N`. This is the one loss a downstream trainer
/// ports directly, so its derivative is provided and oracle-checked.
pub fn bce_segmentation_grad(pred: &ScoreMap, gt: &BinaryMask) -> Result<Vec<f64>, LossError> {
    if pred.len() != gt.data().len() {
        return Err(LossError::DimensionMismatch {
            left: pred.len(),
            right: gt.data().len(),
        });
    }
    let n = pred.len() as f64;
    Ok(pred
        .values
        .iter()
        .zip(gt.data())
        .map(|(&p, &y)| {
            let y = f64::from(u8::from(y));
            (p - y) / (p * (1.0 - p)) / n
        })
        .collect())
}

/// Alternative sign convention for the adversarial terms, exposed for
/// auditing against the NLL forms used everywhere else: the generator
/// objective as a quantity to maximize, and the two fake-image terms with
/// opposite signs.
pub mod as_printed {
    use super::ScoreMap;

    /// `E[log D(G(M))]` (to maximize).
    pub fn generator_adv(d_scores: &ScoreMap) -> f64 {
        d_scores.values().iter().map(|v| v.ln()).sum::<f64>() / d_scores.len() as f64
    }

    /// `-E[log D(RI)]`.
    pub fn discriminator_real(real_scores: &ScoreMap) -> f64 {
        super::mean_neg_log(real_scores)
    }

    /// `E[log(1 - D(G(M_om)))]` (printed without the minus sign).
    pub fn discriminator_fake_paired(scores: &ScoreMap) -> f64 {
        -super::mean_neg_log1m(scores)
    }

    /// `-E[log(1 - D(G(M_gm)))]`.
    pub fn discriminator_fake_unpaired(scores: &ScoreMap) -> f64 {
        super::mean_neg_log1m(scores)
    }
}
