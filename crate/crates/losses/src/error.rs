use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("alignment needs at least 2 domains, got {got}")]
    NotEnoughDomains { got: usize },
    #[error("domain {index} has no samples")]
    EmptyDomain { index: usize },
    #[error("domain {index} has {rows} sample(s); covariance needs at least 2")]
    TooFewSamples { index: usize, rows: usize },
    #[error("label at batch {batch}, epoch {epoch} is not one-hot")]
    LabelNotOneHot { batch: usize, epoch: usize },
    #[error("loss term {term} is non-finite ({value})")]
    NonFinite { term: &'static str, value: f64 },
    #[error("loss weight {name} must be finite and non-negative, got {value}")]
    InvalidWeight { name: &'static str, value: f64 },
}
