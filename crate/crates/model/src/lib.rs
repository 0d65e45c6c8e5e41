//! Sequence-to-sequence staging model.

mod config;
mod model;

pub use config::{ConfigError, ModelConfig};
pub use model::{BoundModel, Mode, StagingModel};
