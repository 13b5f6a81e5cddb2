//! Pipeline configuration, loadable from one TOML or JSON file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colonize::GrowthParams;
use crate::raster::{Connectivity, PostprocessParams, StructElement};
use crate::styleaug::StyleConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Whole-pipeline settings. Per-item seeds are derived from `master_seed`;
/// the `seed` fields inside `growth` and `style` are overwritten per item by
/// the batch commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub masks_per_dataset: usize,
    pub attractor_count: usize,
    pub erosion_iterations: usize,
    pub thin_threshold_tau: f64,
    pub binarize_threshold: f64,
    /// Rasterization threshold applied before component analysis.
    pub raster_threshold: f64,
    pub connectivity: Connectivity,
    pub erosion_element: StructElement,
    pub min_branch_length: Option<f64>,
    pub growth: GrowthParams,
    pub style: StyleConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            masks_per_dataset: 100,
            attractor_count: 3000,
            erosion_iterations: 1,
            thin_threshold_tau: 1.2,
            binarize_threshold: 0.5,
            raster_threshold: 0.0,
            connectivity: Connectivity::Eight,
            erosion_element: StructElement::Cross,
            min_branch_length: None,
            growth: GrowthParams::default(),
            style: StyleConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn postprocess(&self) -> PostprocessParams {
        PostprocessParams {
            threshold: self.raster_threshold,
            connectivity: self.connectivity,
            erosion_element: self.erosion_element,
            erosion_iterations: self.erosion_iterations,
            min_branch_length: self.min_branch_length,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.growth
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.style
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.binarize_threshold) {
            return Err(ConfigError::Invalid(format!(
                "binarize_threshold must be in [0,1], got {}",
                self.binarize_threshold
            )));
        }
        if self.thin_threshold_tau < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "thin_threshold_tau must be non-negative, got {}",
                self.thin_threshold_tau
            )));
        }
        Ok(())
    }

    /// Loads TOML (default) or JSON, chosen by file extension.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.display().to_string(),
            source: e,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.display().to_string(),
            message,
        };
        let cfg: PipelineConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
            _ => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_toml_overrides_defaults() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            "master_seed = 42\nmasks_per_dataset = 3\n[growth]\nsegment_length_l = 6.0\n",
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.masks_per_dataset, 3);
        assert_eq!(cfg.growth.segment_length_l, 6.0);
        // Untouched fields keep defaults.
        assert_eq!(cfg.attractor_count, 3000);
        assert_eq!(cfg.growth.attraction_radius_d, 5.0);
    }

    #[test]
    fn json_config_loads() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"master_seed": 7, "binarize_threshold": 0.25}"#).unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.binarize_threshold, 0.25);
    }

    #[test]
    fn invalid_values_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "binarize_threshold = 2.0\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
        std::fs::write(&path, "[growth]\nsegment_length_l = -1.0\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }
}
