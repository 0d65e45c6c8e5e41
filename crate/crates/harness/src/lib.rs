//! Experiment harness: balanced multi-domain training with alignment
//! regularizers, training-domain validation model selection, leave-one-
//! domain-out evaluation, ablation grids and feature export.

mod config;
mod error;
mod export;
mod loo;
mod metrics;
mod runio;
mod train;

pub use config::{Arm, ExperimentConfig, OptimSettings};
pub use error::HarnessError;
pub use export::{export_features, FeatureExport};
pub use loo::{
    evaluate_fold, leave_one_out, leave_one_out_dir, plan_folds, run_ablation, train_fold,
    AblationCell, AblationReport, ArmSummary, FoldPlan, FoldReport, LooReport, NUM_DOMAINS,
};
pub use metrics::{evaluate, MetricsReport, NUM_CLASSES};
pub use runio::{
    write_ablation_csv, write_features_csv, write_json, write_losses_csv,
};
pub use train::{train, StepTrace, TrainOutcome, TrainReport};
