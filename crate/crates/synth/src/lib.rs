//! Synthetic multi-domain benchmark generation.
//!
//! Five stage classes with loosely sleep-like spectral signatures are shared
//! across domains; domain shift enters through frequency offsets, noise
//! spectral tilt, waveform asymmetry and channel mixing — all of which
//! survive per-recording z-scoring. Global gain or offset shifts would be
//! erased by normalization and are deliberately absent.

mod dataset;
mod generate;
mod io;
mod spec;

pub use dataset::{split_domain, DomainDataset, NormStats};
pub use generate::{
    benchmark_specs, benchmark_specs_with_seeds, generate_domain, make_benchmark, BenchmarkConfig,
};
pub use io::{read_domain, write_domain};
pub use spec::{DomainSpec, ShiftParams, StageParams, NUM_STAGES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("domain spec: {0}")]
    InvalidSpec(String),
    #[error("split fraction {fraction} on {count} sequences leaves an empty side")]
    DegenerateSplit { fraction: f64, count: usize },
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("dataset file malformed: {0}")]
    Malformed(String),
}
