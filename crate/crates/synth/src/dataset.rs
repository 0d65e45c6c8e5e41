//! In-memory domain dataset and the train/validation split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spec::DomainSpec;
use crate::SynthError;

/// Per-recording (sequence) per-channel normalization statistics captured
/// during z-scoring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

/// One domain's sequences, labels and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainDataset {
    pub spec: DomainSpec,
    /// Signals, row-major (count, L, n, C), z-scored per sequence/channel.
    pub signals: Vec<f32>,
    /// Stage labels, row-major (count, L), values 0..5.
    pub labels: Vec<u8>,
    /// (count, C) normalization stats.
    pub norm: Vec<NormStats>,
    pub count: usize,
}

impl DomainDataset {
    pub fn seq_elems(&self) -> usize {
        self.spec.seq_len * self.spec.samples_per_epoch * self.spec.channels
    }

    /// Signal slice of one sequence.
    pub fn sequence(&self, idx: usize) -> &[f32] {
        let n = self.seq_elems();
        &self.signals[idx * n..(idx + 1) * n]
    }

    pub fn sequence_labels(&self, idx: usize) -> &[u8] {
        &self.labels[idx * self.spec.seq_len..(idx + 1) * self.spec.seq_len]
    }

    /// Subset by sequence indices (copies).
    pub fn subset(&self, indices: &[usize]) -> DomainDataset {
        let n = self.seq_elems();
        let mut signals = Vec::with_capacity(indices.len() * n);
        let mut labels = Vec::with_capacity(indices.len() * self.spec.seq_len);
        let mut norm = Vec::with_capacity(indices.len() * self.spec.channels);
        for &i in indices {
            assert!(i < self.count, "sequence index {i} out of {}", self.count);
            signals.extend_from_slice(self.sequence(i));
            labels.extend_from_slice(self.sequence_labels(i));
            norm.extend_from_slice(
                &self.norm[i * self.spec.channels..(i + 1) * self.spec.channels],
            );
        }
        DomainDataset {
            spec: self.spec.clone(),
            signals,
            labels,
            norm,
            count: indices.len(),
        }
    }
}

/// Disjoint sequence-level split, deterministic in `seed`.
pub fn split_domain(
    dataset: &DomainDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(DomainDataset, DomainDataset), SynthError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SynthError::DegenerateSplit {
            fraction: train_fraction,
            count: dataset.count,
        });
    }
    let train_count = (dataset.count as f64 * train_fraction).floor() as usize;
    if train_count == 0 || train_count == dataset.count {
        return Err(SynthError::DegenerateSplit {
            fraction: train_fraction,
            count: dataset.count,
        });
    }
    let mut order: Vec<usize> = (0..dataset.count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (dataset.spec.id as u64).wrapping_mul(0x9E37_79B9));
    order.shuffle(&mut rng);
    let (train_idx, val_idx) = order.split_at(train_count);
    let mut train_idx = train_idx.to_vec();
    let mut val_idx = val_idx.to_vec();
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok((dataset.subset(&train_idx), dataset.subset(&val_idx)))
}
