//! Full experiment configuration with presets.

use serde::{Deserialize, Serialize};
use sleepalign_autodiff::AdamConfig;
use sleepalign_losses::{LossWeights, PairMode};
use sleepalign_model::ModelConfig;

use crate::HarnessError;

/// Training arms: which regularizers join the classification loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    #[serde(rename = "BASE")]
    Base,
    #[serde(rename = "AE")]
    Ae,
    #[serde(rename = "EA")]
    Ea,
    #[serde(rename = "SA")]
    Sa,
    #[serde(rename = "AE+EA")]
    AeEa,
    #[serde(rename = "AE+SA")]
    AeSa,
    #[serde(rename = "FULL")]
    Full,
}

impl Arm {
    pub const ALL: [Arm; 7] = [
        Arm::Base,
        Arm::Ae,
        Arm::Ea,
        Arm::Sa,
        Arm::AeEa,
        Arm::AeSa,
        Arm::Full,
    ];

    pub fn includes_reconstruction(self) -> bool {
        matches!(self, Arm::Ae | Arm::AeEa | Arm::AeSa | Arm::Full)
    }
    pub fn includes_epoch(self) -> bool {
        matches!(self, Arm::Ea | Arm::AeEa | Arm::Full)
    }
    pub fn includes_sequence(self) -> bool {
        matches!(self, Arm::Sa | Arm::AeSa | Arm::Full)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Base => "BASE",
            Arm::Ae => "AE",
            Arm::Ea => "EA",
            Arm::Sa => "SA",
            Arm::AeEa => "AE+EA",
            Arm::AeSa => "AE+SA",
            Arm::Full => "FULL",
        }
    }
}

impl std::str::FromStr for Arm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "BASE" => Ok(Arm::Base),
            "AE" => Ok(Arm::Ae),
            "EA" => Ok(Arm::Ea),
            "SA" => Ok(Arm::Sa),
            "AE+EA" => Ok(Arm::AeEa),
            "AE+SA" => Ok(Arm::AeSa),
            "FULL" => Ok(Arm::Full),
            other => Err(format!(
                "unknown arm {other:?} (expected BASE, AE, EA, SA, AE+EA, AE+SA or FULL)"
            )),
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimizer settings (Adam).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimSettings {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled (AdamW-style) decay instead of coupled L2.
    pub decoupled_decay: bool,
}

impl Default for OptimSettings {
    fn default() -> Self {
        OptimSettings {
            lr: 1e-3,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decoupled_decay: false,
        }
    }
}

impl OptimSettings {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
            decoupled_decay: self.decoupled_decay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub weights: LossWeights,
    pub optim: OptimSettings,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_fraction: f64,
    /// M: source domains per training run.
    pub num_source_domains: usize,
    pub arm: Arm,
    pub pair_mode: PairMode,
    pub seed: u64,
    /// Held-out domain for single-fold runs; leave-one-out sets it per fold.
    pub heldout: Option<usize>,
}

impl ExperimentConfig {
    /// Desk-scale defaults: sized so a full ablation grid stays CPU-friendly.
    pub fn desk() -> Self {
        ExperimentConfig {
            model: ModelConfig::desk(),
            weights: LossWeights::default(),
            optim: OptimSettings::default(),
            epochs: 30,
            batch_size: 32,
            train_fraction: 0.8,
            num_source_domains: 4,
            arm: Arm::Full,
            pair_mode: PairMode::Unordered,
            seed: 7,
            heldout: None,
        }
    }

    /// Full-scale preset: L=20, d=512, lr 1e-3, weight decay 1e-4, batch 32,
    /// dropout 0.1, all loss weights 0.5, 50 training epochs.
    pub fn paper_scale() -> Self {
        ExperimentConfig {
            model: ModelConfig::paper_scale(),
            epochs: 50,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.weights
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.num_source_domains < 2 {
            return Err(HarnessError::Config(format!(
                "num_source_domains must be >= 2, got {}",
                self.num_source_domains
            )));
        }
        if self.batch_size == 0 || self.batch_size % self.num_source_domains != 0 {
            return Err(HarnessError::Config(format!(
                "batch_size {} must be a positive multiple of num_source_domains {}",
                self.batch_size, self.num_source_domains
            )));
        }
        if self.epochs == 0 {
            return Err(HarnessError::Config("epochs must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(HarnessError::Config(format!(
                "train_fraction {} must be in (0, 1)",
                self.train_fraction
            )));
        }
        if !(self.optim.lr > 0.0) || self.optim.weight_decay < 0.0 {
            return Err(HarnessError::Config(
                "optimizer needs lr > 0 and weight_decay >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Which loss terms this run actually computes: the arm picks the term
    /// set, and a zero weight drops the term entirely (so FULL with a zeroed
    /// weight is structurally identical to the corresponding smaller arm).
    pub fn active_terms(&self) -> (bool, bool, bool) {
        (
            self.arm.includes_reconstruction() && self.weights.reconstruction > 0.0,
            self.arm.includes_epoch() && self.weights.epoch > 0.0,
            self.arm.includes_sequence() && self.weights.sequence > 0.0,
        )
    }
}
