//! Model geometry and architecture knobs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("model config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// n: samples per epoch
    pub samples_per_epoch: usize,
    /// C: input channels
    pub channels: usize,
    /// L: epochs per sequence
    pub seq_len: usize,
    /// d: feature dimension
    pub feature_dim: usize,
    /// N: stage classes (5)
    pub num_stages: usize,
    /// Channel widths of the epoch-encoder conv blocks.
    pub conv_channels: Vec<usize>,
    /// Kernel sizes per conv block (odd; each block halves the width).
    pub conv_kernels: Vec<usize>,
    pub attn_layers: usize,
    pub attn_heads: usize,
    pub ffn_hidden: usize,
    pub dropout: f64,
}

impl ModelConfig {
    /// Small configuration for fast CPU experiments.
    pub fn desk() -> Self {
        ModelConfig {
            samples_per_epoch: 256,
            channels: 2,
            seq_len: 8,
            feature_dim: 64,
            num_stages: 5,
            conv_channels: vec![4, 8, 16],
            conv_kernels: vec![7, 5, 3],
            attn_layers: 2,
            attn_heads: 4,
            ffn_hidden: 128,
            dropout: 0.1,
        }
    }

    /// Full-scale preset: 30 s epochs at 100 Hz, L=20, d=512.
    pub fn paper_scale() -> Self {
        ModelConfig {
            samples_per_epoch: 3000,
            channels: 2,
            seq_len: 20,
            feature_dim: 512,
            num_stages: 5,
            conv_channels: vec![32, 64, 128],
            conv_kernels: vec![7, 5, 3],
            attn_layers: 2,
            attn_heads: 8,
            ffn_hidden: 1024,
            dropout: 0.1,
        }
    }

    /// Tiny geometry for gradient checks in f64.
    pub fn tiny() -> Self {
        ModelConfig {
            samples_per_epoch: 16,
            channels: 2,
            seq_len: 3,
            feature_dim: 8,
            num_stages: 5,
            conv_channels: vec![3, 4],
            conv_kernels: vec![3, 3],
            attn_layers: 1,
            attn_heads: 2,
            ffn_hidden: 12,
            dropout: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        if self.num_stages != 5 {
            return err(format!("num_stages must be 5, got {}", self.num_stages));
        }
        if self.seq_len < 2 {
            return err(format!("seq_len must be >= 2, got {}", self.seq_len));
        }
        for (name, v) in [
            ("samples_per_epoch", self.samples_per_epoch),
            ("channels", self.channels),
            ("feature_dim", self.feature_dim),
            ("attn_layers", self.attn_layers),
            ("attn_heads", self.attn_heads),
            ("ffn_hidden", self.ffn_hidden),
        ] {
            if v == 0 {
                return err(format!("{name} must be positive"));
            }
        }
        if self.conv_channels.is_empty() || self.conv_channels.len() != self.conv_kernels.len() {
            return err(format!(
                "conv_channels ({}) and conv_kernels ({}) must be non-empty and equal length",
                self.conv_channels.len(),
                self.conv_kernels.len()
            ));
        }
        if self.conv_channels.iter().any(|&c| c == 0) {
            return err("conv channel widths must be positive".into());
        }
        if self.conv_kernels.iter().any(|&k| k % 2 == 0) {
            return err(format!("conv kernels must be odd, got {:?}", self.conv_kernels));
        }
        let down = 1usize << self.conv_blocks();
        if self.samples_per_epoch % down != 0 {
            return err(format!(
                "samples_per_epoch {} must be divisible by 2^{} (the conv stack downsampling)",
                self.samples_per_epoch,
                self.conv_blocks()
            ));
        }
        if self.feature_dim % self.attn_heads != 0 {
            return err(format!(
                "feature_dim {} must be divisible by attn_heads {}",
                self.feature_dim, self.attn_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return err(format!("dropout {} must be in [0, 1)", self.dropout));
        }
        Ok(())
    }

    pub fn conv_blocks(&self) -> usize {
        self.conv_channels.len()
    }

    /// Width of the epoch signal after the conv stack.
    pub fn latent_width(&self) -> usize {
        self.samples_per_epoch >> self.conv_blocks()
    }
}
