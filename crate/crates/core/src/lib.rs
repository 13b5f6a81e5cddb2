//! Core library for DGSSA-style vessel mask generation and evaluation.
//!
//! The pipeline has three legs, mirrored by the module layout:
//!
//! * structural augmentation — [`colonize`] grows vessel-like trees by space
//!   colonization and assigns branch radii by Murray's law; [`raster`] turns
//!   trees into binary masks and post-processes them (threshold, largest
//!   component, erosion, ROI fit);
//! * style augmentation — [`styleaug`] implements PixMix with photometric
//!   ops and uncertainty perturbation over RGB images;
//! * evaluation — [`metrics`] holds the segmentation metric suite (confusion
//!   metrics, exact AUC, skeleton/radius analysis, thin/thick DSC, domain
//!   distance, paired t-test) and [`losses`] the closed-form loss values
//!   used by the training side.
//!
//! [`image`](crate::image) defines the pixel-grid containers shared by all of
//! the above; [`io`], [`config`] and [`pipeline`] provide file formats and
//! deterministic batch orchestration for the CLI.

pub mod colonize;
pub mod config;
pub mod image;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod seed;
pub mod styleaug;
