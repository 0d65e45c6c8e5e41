//! Loop references for the training losses.

use crate::stats;

/// Mean over batch of (1/L) * sum over epochs of the squared Euclidean norm
/// of the per-epoch residual. `x` and `xhat` are `(batch, seq_len, epoch)`
/// flattened row-major with `epoch = samples * channels` scalars.
pub fn reconstruction(x: &[f64], xhat: &[f64], batch: usize, seq_len: usize, epoch: usize) -> f64 {
    assert_eq!(x.len(), batch * seq_len * epoch);
    assert_eq!(x.len(), xhat.len());
    let mut total = 0.0;
    for b in 0..batch {
        let mut per_seq = 0.0;
        for k in 0..seq_len {
            let off = (b * seq_len + k) * epoch;
            per_seq += stats::sq_euclid(&x[off..off + epoch], &xhat[off..off + epoch]);
        }
        total += per_seq / seq_len as f64;
    }
    total / batch as f64
}

/// Sum over unordered domain pairs of the squared Euclidean distance of mean
/// feature vectors. Banks are (rows, data) with shared `dim`.
pub fn first_order(banks: &[(usize, Vec<f64>)], dim: usize) -> f64 {
    let means: Vec<Vec<f64>> = banks
        .iter()
        .map(|(rows, data)| stats::mean_rows(data, *rows, dim))
        .collect();
    let mut total = 0.0;
    for i in 0..means.len() {
        for j in (i + 1)..means.len() {
            total += stats::sq_euclid(&means[i], &means[j]);
        }
    }
    total
}

/// Sum over unordered domain pairs of the squared Frobenius distance of
/// sample covariance matrices.
pub fn second_order(banks: &[(usize, Vec<f64>)], dim: usize) -> f64 {
    let covs: Vec<Vec<f64>> = banks
        .iter()
        .map(|(rows, data)| stats::covariance(data, *rows, dim))
        .collect();
    let mut total = 0.0;
    for i in 0..covs.len() {
        for j in (i + 1)..covs.len() {
            total += stats::frob_sq_diff(&covs[i], &covs[j]);
        }
    }
    total
}

/// Sum over unordered pairs of squared Frobenius distances of `dim x dim`
/// matrices.
pub fn pairwise_frob_sq(mats: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            total += stats::frob_sq_diff(&mats[i], &mats[j]);
        }
    }
    total
}

/// Cross-entropy: per sequence, sum over epochs and classes of
/// `-y * ln(max(p, guard))`, then mean over the batch. `probs` and the
/// one-hot `labels` are `(batch, seq_len, classes)` row-major.
pub fn cross_entropy(
    probs: &[f64],
    labels: &[f64],
    batch: usize,
    seq_len: usize,
    classes: usize,
    guard: f64,
) -> f64 {
    assert_eq!(probs.len(), batch * seq_len * classes);
    assert_eq!(probs.len(), labels.len());
    let mut total = 0.0;
    for b in 0..batch {
        let mut per_seq = 0.0;
        for k in 0..seq_len {
            for c in 0..classes {
                let idx = (b * seq_len + k) * classes + c;
                per_seq -= labels[idx] * probs[idx].max(guard).ln();
            }
        }
        total += per_seq;
    }
    total / batch as f64
}
