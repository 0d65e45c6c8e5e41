//! Loss terms for multi-domain sequence-to-sequence training.
//!
//! Epoch-level alignment matches per-epoch feature means and covariances
//! across domains; sequence-level alignment matches domain-averaged
//! inter-epoch Pearson correlation matrices. Everything is built from
//! recorded tensor ops, so gradients flow through every statistic (means,
//! covariances and correlations are not detached).

mod align;
mod baselines;
mod basic;
mod error;
mod pearson;

pub use align::{epoch_first_order, epoch_level_loss, epoch_second_order};
pub use baselines::{coral_loss, coral_scale, median_sq_distance, mmd_loss, mmd_pair_fixed_bandwidth};
pub use basic::{classification_loss, reconstruction_loss, total_loss, CE_GUARD};
pub use error::LossError;
pub use pearson::{
    domain_correlation, pearson_batched, pearson_matrix, sequence_level_loss, PEARSON_EPS,
};

use serde::{Deserialize, Serialize};

/// How domain pairs are enumerated in the alignment sums. `Unordered` counts
/// each i<j pair once; `Ordered` doubles every symmetric term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    #[default]
    Unordered,
    Ordered,
}

impl PairMode {
    pub(crate) fn factor(self) -> f64 {
        match self {
            PairMode::Unordered => 1.0,
            PairMode::Ordered => 2.0,
        }
    }
}

/// Coefficients of the regularizer terms in the total loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// lambda_1: reconstruction
    pub reconstruction: f64,
    /// lambda_2: epoch-level alignment
    pub epoch: f64,
    /// lambda_3: sequence-level alignment
    pub sequence: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            reconstruction: 0.5,
            epoch: 0.5,
            sequence: 0.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        for (name, v) in [
            ("reconstruction", self.reconstruction),
            ("epoch", self.epoch),
            ("sequence", self.sequence),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LossError::InvalidWeight { name, value: v });
            }
        }
        Ok(())
    }
}
