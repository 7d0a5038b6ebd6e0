//! FLOPs and payload sizes of the split foundation model.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Architecture of the fine-tuned model. Defaults describe a SpectralGPT-style
/// ViT-B backbone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub patch_count: u64,
    pub patch_size: u64,
    pub embedding_dim: u64,
    /// Sequence length seen by each transformer block.
    pub sequence_length: u64,
    pub hidden_dim: u64,
    pub blocks: u64,
    /// Tokens kept in the uplinked embedding vector. With the hidden width
    /// this sets the per-sample uplink volume.
    pub embedding_tokens: u64,
    pub feature_dim: u64,
    pub head_input_dim: u64,
    pub head_output_dim: u64,
    pub value_bits: u64,
    pub image_width_px: u64,
    pub image_height_px: u64,
    pub image_channels: u64,
    pub image_bits_per_channel: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            patch_count: 576,
            patch_size: 256,
            embedding_dim: 768,
            sequence_length: 576,
            hidden_dim: 768,
            blocks: 12,
            embedding_tokens: 6510,
            feature_dim: 1000,
            head_input_dim: 1000,
            head_output_dim: 1100,
            value_bits: 32,
            image_width_px: 4800,
            image_height_px: 2800,
            image_channels: 13,
            image_bits_per_channel: 8,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("patch_count", self.patch_count),
            ("patch_size", self.patch_size),
            ("embedding_dim", self.embedding_dim),
            ("sequence_length", self.sequence_length),
            ("hidden_dim", self.hidden_dim),
            ("blocks", self.blocks),
            ("embedding_tokens", self.embedding_tokens),
            ("feature_dim", self.feature_dim),
            ("head_input_dim", self.head_input_dim),
            ("head_output_dim", self.head_output_dim),
            ("value_bits", self.value_bits),
            ("image_width_px", self.image_width_px),
            ("image_height_px", self.image_height_px),
            ("image_channels", self.image_channels),
            ("image_bits_per_channel", self.image_bits_per_channel),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(ConfigError::invariant(format!("model.{name}"), "must be positive"));
            }
        }
        Ok(())
    }
}

/// Processing speeds and training knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComputeConfig {
    pub samples_per_satellite: u64,
    pub satellite_flops_per_s: f64,
    pub ground_flops_per_s: f64,
    pub local_epochs: u64,
    /// Cost of one training pass relative to a forward pass when the whole
    /// model is trained on board (forward plus a backward at twice the cost).
    pub training_pass_multiplier: f64,
}

/// Sustained on-board throughput. Chosen so that a full on-board fine-tuning
/// step is compute-bound the way a small radiation-tolerant processor is;
/// see the guide's calibration chapter.
pub const DEFAULT_SATELLITE_FLOPS: f64 = 2.5e8;
pub const DEFAULT_GROUND_FLOPS: f64 = 1.0e14;

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            samples_per_satellite: 1000,
            satellite_flops_per_s: DEFAULT_SATELLITE_FLOPS,
            ground_flops_per_s: DEFAULT_GROUND_FLOPS,
            local_epochs: 1,
            training_pass_multiplier: 3.0,
        }
    }
}

impl ComputeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples_per_satellite == 0 {
            return Err(ConfigError::invariant("compute.samples_per_satellite", "must be positive"));
        }
        if self.local_epochs == 0 {
            return Err(ConfigError::invariant("compute.local_epochs", "must be positive"));
        }
        for (name, v) in [
            ("satellite_flops_per_s", self.satellite_flops_per_s),
            ("ground_flops_per_s", self.ground_flops_per_s),
            ("training_pass_multiplier", self.training_pass_multiplier),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::invariant(format!("compute.{name}"), "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Everything the round pipeline needs to know about one satellite's work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadModel {
    pub samples_per_satellite: f64,
    pub embedding_bits: f64,
    pub feature_bits: f64,
    pub head_param_bits: f64,
    pub raw_image_bits: f64,
    pub embedding_flops: f64,
    pub block_flops: f64,
    pub blocks: f64,
    pub backbone_flops: f64,
    pub head_flops: f64,
    pub satellite_flops_per_s: f64,
    pub ground_flops_per_s: f64,
    pub local_epochs: f64,
    pub training_pass_multiplier: f64,
}

impl WorkloadModel {
    /// Forward FLOPs of the whole model for one sample.
    pub fn full_model_flops(&self) -> f64 {
        self.embedding_flops + self.backbone_flops + self.head_flops
    }

    /// Copy with a different sample count.
    pub fn with_samples(mut self, samples: f64) -> Self {
        self.samples_per_satellite = samples;
        self
    }
}

/// Evaluates the per-sample size and FLOPs formulas.
pub fn workload_from_model(model: &ModelConfig, compute: &ComputeConfig) -> Result<WorkloadModel, ConfigError> {
    model.validate()?;
    compute.validate()?;
    let f = |v: u64| v as f64;
    let seq = f(model.sequence_length);
    let hidden = f(model.hidden_dim);
    let block_flops = seq * seq * hidden + seq * hidden * hidden;
    let head_params = f(model.head_input_dim) * f(model.head_output_dim);
    Ok(WorkloadModel {
        samples_per_satellite: f(compute.samples_per_satellite),
        embedding_bits: f(model.embedding_tokens) * hidden * f(model.value_bits),
        feature_bits: f(model.feature_dim) * f(model.value_bits),
        head_param_bits: head_params * f(model.value_bits),
        raw_image_bits: f(model.image_width_px)
            * f(model.image_height_px)
            * f(model.image_channels)
            * f(model.image_bits_per_channel),
        embedding_flops: f(model.patch_count) * f(model.patch_size) * f(model.embedding_dim),
        block_flops,
        blocks: f(model.blocks),
        backbone_flops: f(model.blocks) * block_flops,
        head_flops: head_params,
        satellite_flops_per_s: compute.satellite_flops_per_s,
        ground_flops_per_s: compute.ground_flops_per_s,
        local_epochs: f(compute.local_epochs),
        training_pass_multiplier: compute.training_pass_multiplier,
    })
}
