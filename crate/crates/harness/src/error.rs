use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Synth(#[from] sleepalign_synth::SynthError),
    #[error(transparent)]
    Loss(#[from] sleepalign_losses::LossError),
    #[error(transparent)]
    Model(#[from] sleepalign_model::ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] sleepalign_autodiff::CheckpointError),
    #[error("training aborted at step {step}: non-finite loss ({details})")]
    NonFiniteLoss { step: usize, details: String },
    #[error("expected {expected} domains, got {got}")]
    WrongDomainCount { expected: usize, got: usize },
    #[error("duplicate domain id {id}")]
    DuplicateDomain { id: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}
