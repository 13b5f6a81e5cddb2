//! PixMix-style photometric augmentation with uncertainty perturbation.
//!
//! The mixing chain starts from either the original image or a photometric
//! variant of it, then repeatedly mixes in either another photometric variant
//! or an external "mixer" image, optionally re-normalizing the mixed-in image
//! with Gaussian-perturbed channel statistics first. All ops are photometric
//! only: geometry never changes, so segmentation labels stay valid.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{ChannelStats, RgbImage};

#[derive(Debug, Error, PartialEq)]
pub enum StyleError {
    #[error("unknown photometric op {0:?}")]
    UnknownOp(String),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("mixer set is empty")]
    NoMixers,
    #[error("invalid style config: {0}")]
    InvalidConfig(String),
}

/// Photometric op catalog. Geometry-preserving by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhotoOp {
    Brightness,
    Contrast,
    Gamma,
    Posterize,
    Solarize,
    Equalize,
}

impl FromStr for PhotoOp {
    type Err = StyleError;

    fn from_str(s: &str) -> Result<Self, StyleError> {
        match s {
            "brightness" => Ok(PhotoOp::Brightness),
            "contrast" => Ok(PhotoOp::Contrast),
            "gamma" => Ok(PhotoOp::Gamma),
            "posterize" => Ok(PhotoOp::Posterize),
            "solarize" => Ok(PhotoOp::Solarize),
            "equalize" => Ok(PhotoOp::Equalize),
            other => Err(StyleError::UnknownOp(other.to_string())),
        }
    }
}

/// One catalog entry: an op and the range its magnitude is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotoAugSpec {
    pub op: PhotoOp,
    pub magnitude: (f64, f64),
}

fn default_catalog() -> Vec<PhotoAugSpec> {
    vec![
        PhotoAugSpec {
            op: PhotoOp::Brightness,
            magnitude: (-0.3, 0.3),
        },
        PhotoAugSpec {
            op: PhotoOp::Contrast,
            magnitude: (-0.5, 0.5),
        },
        PhotoAugSpec {
            op: PhotoOp::Gamma,
            magnitude: (0.5, 2.0),
        },
        PhotoAugSpec {
            op: PhotoOp::Posterize,
            magnitude: (3.0, 8.0),
        },
        PhotoAugSpec {
            op: PhotoOp::Solarize,
            magnitude: (0.5, 1.0),
        },
        PhotoAugSpec {
            op: PhotoOp::Equalize,
            magnitude: (0.0, 0.0),
        },
    ]
}

/// PixMix configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StyleConfig {
    pub max_rounds_k: u32,
    pub mixing_ratio_delta: f64,
    pub perturb_prob_p: f64,
    pub photoaug_ops: Vec<PhotoAugSpec>,
    pub sigma_floor: f64,
    pub seed: u64,
    /// Redraws delta uniformly in `[0, 1]` at every mixing step instead of
    /// using `mixing_ratio_delta` throughout the call.
    pub resample_delta: bool,
}

impl Default for StyleConfig {
    fn default() -> Self {
        Self {
            max_rounds_k: 4,
            mixing_ratio_delta: 0.5,
            perturb_prob_p: 0.5,
            photoaug_ops: default_catalog(),
            sigma_floor: 1e-6,
            seed: 0,
            resample_delta: false,
        }
    }
}

impl StyleConfig {
    pub fn validate(&self) -> Result<(), StyleError> {
        if !(0.0..=1.0).contains(&self.mixing_ratio_delta) {
            return Err(StyleError::InvalidConfig(format!(
                "mixing_ratio_delta must be in [0,1], got {}",
                self.mixing_ratio_delta
            )));
        }
        if !(0.0..=1.0).contains(&self.perturb_prob_p) {
            return Err(StyleError::InvalidConfig(format!(
                "perturb_prob_p must be in [0,1], got {}",
                self.perturb_prob_p
            )));
        }
        if !(self.sigma_floor > 0.0) {
            return Err(StyleError::InvalidConfig(format!(
                "sigma_floor must be positive, got {}",
                self.sigma_floor
            )));
        }
        if self.photoaug_ops.is_empty() {
            return Err(StyleError::InvalidConfig(
                "photoaug op catalog is empty".into(),
            ));
        }
        for spec in &self.photoaug_ops {
            if spec.magnitude.0 > spec.magnitude.1 {
                return Err(StyleError::InvalidConfig(format!(
                    "magnitude range for {:?} is inverted",
                    spec.op
                )));
            }
        }
        Ok(())
    }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Histogram equalization of one channel's 8-bit quantization, using the
/// PIL LUT construction (integer step; identity when the occupied range is
/// too small for a step).
fn equalize_channel(values: &mut Vec<f64>) {
    let mut histo = [0usize; 256];
    for v in values.iter() {
        histo[to_u8(*v) as usize] += 1;
    }
    let occupied: Vec<usize> = histo.iter().copied().filter(|&c| c > 0).collect();
    if occupied.len() <= 1 {
        return;
    }
    let step = (occupied.iter().sum::<usize>() - occupied.last().unwrap()) / 255;
    if step == 0 {
        return;
    }
    let mut lut = [0u8; 256];
    let mut n = step / 2;
    for (i, slot) in lut.iter_mut().enumerate() {
        *slot = (n / step).min(255) as u8;
        n += histo[i];
    }
    for v in values.iter_mut() {
        *v = f64::from(lut[to_u8(*v) as usize]) / 255.0;
    }
}

/// Applies one photometric transform at the given magnitude. Output is
/// clamped to `[0, 1]`; width and height are unchanged.
pub fn photoaug(img: &RgbImage, op: PhotoOp, magnitude: f64) -> RgbImage {
    let mut out = img.clone();
    match op {
        PhotoOp::Brightness => {
            for v in out.data_mut() {
                *v = clamp01(*v + magnitude);
            }
        }
        PhotoOp::Contrast => {
            let factor = 1.0 + magnitude;
            for v in out.data_mut() {
                *v = clamp01(0.5 + (*v - 0.5) * factor);
            }
        }
        PhotoOp::Gamma => {
            for v in out.data_mut() {
                *v = clamp01(v.powf(magnitude));
            }
        }
        PhotoOp::Posterize => {
            let bits = (magnitude.round() as i32).clamp(1, 8) as u32;
            let mask = !(0xffu8 >> bits);
            for v in out.data_mut() {
                *v = f64::from(to_u8(*v) & mask) / 255.0;
            }
        }
        PhotoOp::Solarize => {
            for v in out.data_mut() {
                if *v > magnitude {
                    *v = clamp01(1.0 - *v);
                }
            }
        }
        PhotoOp::Equalize => {
            for c in 0..3 {
                let mut values: Vec<f64> = out.channel(c).collect();
                equalize_channel(&mut values);
                let mut it = values.into_iter();
                out.map_channel(c, |_| it.next().unwrap());
            }
        }
    }
    out
}

/// Per-channel population mean and standard deviation (divide by `H*W`).
pub fn channel_stats(img: &RgbImage) -> ChannelStats {
    let n = img.pixel_count() as f64;
    let mut mean = [0.0; 3];
    let mut std = [0.0; 3];
    for c in 0..3 {
        let sum: f64 = img.channel(c).sum();
        mean[c] = sum / n;
        let ss: f64 = img.channel(c).map(|v| (v - mean[c]) * (v - mean[c])).sum();
        std[c] = (ss / n).sqrt();
    }
    ChannelStats { mean, std }
}

/// Re-normalizes each channel with Gaussian-perturbed statistics:
/// `beta = mu + eps1*mu`, `gamma = sigma + eps2*sigma`, then
/// `(x - mu) / max(sigma, sigma_floor) * gamma + beta`, clamped to `[0, 1]`.
///
/// Applied as `x * scale + offset` with `scale = gamma / max(sigma, floor)`
/// and `offset = beta - mu * scale`, so zero eps is the exact identity
/// whenever `sigma >= sigma_floor`.
pub fn uncertainty_perturb(
    img: &RgbImage,
    eps1: [f64; 3],
    eps2: [f64; 3],
    sigma_floor: f64,
) -> RgbImage {
    let stats = channel_stats(img);
    let mut out = img.clone();
    for c in 0..3 {
        let mu = stats.mean[c];
        let sigma = stats.std[c];
        let beta = mu + eps1[c] * mu;
        let gamma = sigma + eps2[c] * sigma;
        let scale = gamma / sigma.max(sigma_floor);
        let offset = beta - mu * scale;
        out.map_channel(c, |v| clamp01(v * scale + offset));
    }
    out
}

/// Element-wise mixing operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixKind {
    Add,
    Multiply,
}

/// Mixes `a` and `b`: `add` is the convex combination
/// `(1-delta)*a + delta*b`, `multiply` the geometric one
/// `a^(1-delta) * b^delta`. Both are exact identities at the endpoints.
pub fn mix(a: &RgbImage, b: &RgbImage, delta: f64, kind: MixKind) -> Result<RgbImage, StyleError> {
    if a.dims() != b.dims() {
        return Err(StyleError::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    if delta == 0.0 {
        return Ok(a.clone());
    }
    if delta == 1.0 {
        return Ok(b.clone());
    }
    let mut out = a.clone();
    match kind {
        MixKind::Add => {
            for (v, &bv) in out.data_mut().iter_mut().zip(b.data()) {
                *v = clamp01((1.0 - delta) * *v + delta * bv);
            }
        }
        MixKind::Multiply => {
            for (v, &bv) in out.data_mut().iter_mut().zip(b.data()) {
                *v = clamp01(v.powf(1.0 - delta) * bv.powf(delta));
            }
        }
    }
    Ok(out)
}

/// Where a mixing step's image came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MixSource {
    PhotoAug { op: PhotoOp, magnitude: f64 },
    Mixer { index: usize },
}

/// One mixing step as executed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTrace {
    pub source: MixSource,
    pub op: MixKind,
    pub perturbed: bool,
    pub delta: f64,
}

/// Record of one pixmix call, for run logs and the perturbation-rate checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PixmixTrace {
    pub initial_augmented: bool,
    pub rounds_drawn: u32,
    pub steps: Vec<StepTrace>,
}

fn sample_magnitude(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn sample_photoaug(rng: &mut ChaCha8Rng, img: &RgbImage, cfg: &StyleConfig) -> (RgbImage, PhotoOp, f64) {
    let spec = cfg.photoaug_ops[rng.random_range(0..cfg.photoaug_ops.len())];
    let magnitude = sample_magnitude(rng, spec.magnitude);
    (photoaug(img, spec.op, magnitude), spec.op, magnitude)
}

/// PixMix chain over `x` with the given mixer set. Mixers must already share
/// `x`'s dimensions. Deterministic per `cfg.seed`.
pub fn pixmix(x: &RgbImage, mixers: &[RgbImage], cfg: &StyleConfig) -> Result<RgbImage, StyleError> {
    pixmix_traced(x, mixers, cfg).map(|(img, _)| img)
}

/// [`pixmix`], also returning the executed-step trace.
pub fn pixmix_traced(
    x: &RgbImage,
    mixers: &[RgbImage],
    cfg: &StyleConfig,
) -> Result<(RgbImage, PixmixTrace), StyleError> {
    cfg.validate()?;
    if mixers.is_empty() {
        return Err(StyleError::NoMixers);
    }
    for m in mixers {
        if m.dims() != x.dims() {
            return Err(StyleError::DimensionMismatch(
                x.width(),
                x.height(),
                m.width(),
                m.height(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = PixmixTrace::default();

    let mut current = if rng.random_range(0..2u32) == 0 {
        trace.initial_augmented = true;
        sample_photoaug(&mut rng, x, cfg).0
    } else {
        x.clone()
    };

    let rounds = rng.random_range(0..=cfg.max_rounds_k);
    trace.rounds_drawn = rounds;
    for _ in 0..rounds {
        let (mixed, source) = if rng.random_range(0..2u32) == 0 {
            let (img, op, magnitude) = sample_photoaug(&mut rng, x, cfg);
            (img, MixSource::PhotoAug { op, magnitude })
        } else {
            let index = rng.random_range(0..mixers.len());
            (mixers[index].clone(), MixSource::Mixer { index })
        };
        let op = if rng.random_range(0..2u32) == 0 {
            MixKind::Add
        } else {
            MixKind::Multiply
        };
        let perturbed = rng.random::<f64>() < cfg.perturb_prob_p;
        let contribution = if perturbed {
            let mut eps1 = [0.0; 3];
            let mut eps2 = [0.0; 3];
            for c in 0..3 {
                eps1[c] = StandardNormal.sample(&mut rng);
                eps2[c] = StandardNormal.sample(&mut rng);
            }
            uncertainty_perturb(&mixed, eps1, eps2, cfg.sigma_floor)
        } else {
            mixed
        };
        let delta = if cfg.resample_delta {
            rng.random_range(0.0..=1.0)
        } else {
            cfg.mixing_ratio_delta
        };
        current = mix(&current, &contribution, delta, op)?;
        trace.steps.push(StepTrace {
            source,
            op,
            perturbed,
            delta,
        });
    }
    Ok((current, trace))
}
