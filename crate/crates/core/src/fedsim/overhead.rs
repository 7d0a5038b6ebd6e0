//! Satellite-ground volume of the split pipeline versus shipping raw imagery.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub name: String,
    pub width_px: u64,
    pub height_px: u64,
    pub channels: u64,
    #[serde(default = "default_bits")]
    pub bits_per_channel: u64,
    #[serde(default = "default_images")]
    pub images: u64,
}

fn default_bits() -> u64 {
    8
}

fn default_images() -> u64 {
    1
}

impl DatasetMeta {
    pub fn new(name: &str, width_px: u64, height_px: u64, channels: u64, images: u64) -> Self {
        Self { name: name.into(), width_px, height_px, channels, bits_per_channel: 8, images }
    }

    pub fn raw_bits_per_image(&self) -> f64 {
        (self.width_px * self.height_px * self.channels * self.bits_per_channel) as f64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.width_px == 0 || self.height_px == 0 || self.channels == 0 || self.bits_per_channel == 0 {
            return Err(ConfigError::invariant(format!("dataset {}", self.name), "image dimensions must be positive"));
        }
        Ok(())
    }
}

/// Image geometries of common remote-sensing datasets. The SegMunich-like
/// entry is one full Sentinel-2 tile (10 bands resampled to 10 m).
pub fn dataset_presets() -> Vec<DatasetMeta> {
    vec![
        DatasetMeta::new("bridge", 4800, 2843, 3, 500),
        DatasetMeta::new("aerial", 3000, 3000, 3, 180),
        DatasetMeta::new("oscd", 600, 600, 13, 48),
        DatasetMeta::new("segmunich_like", 10980, 10980, 10, 1),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadRow {
    pub name: String,
    pub raw_bits_per_image: f64,
    pub transmitted_bits_per_image: f64,
    pub ratio: f64,
    pub raw_bits_total: f64,
    pub transmitted_bits_total: f64,
    /// `false` when the split pipeline moves more bits than the raw images.
    pub beneficial: bool,
}

/// Uplinked embedding plus downlinked feature, relative to the raw image.
pub fn centralized_overhead(datasets: &[DatasetMeta], embedding_bits: f64, feature_bits: f64) -> Vec<OverheadRow> {
    datasets
        .iter()
        .map(|d| {
            let raw = d.raw_bits_per_image();
            let sent = embedding_bits + feature_bits;
            let ratio = sent / raw;
            OverheadRow {
                name: d.name.clone(),
                raw_bits_per_image: raw,
                transmitted_bits_per_image: sent,
                ratio,
                raw_bits_total: raw * d.images as f64,
                transmitted_bits_total: sent * d.images as f64,
                beneficial: ratio < 1.0,
            }
        })
        .collect()
}
