//! Feature export with a first-principal-component projection.

use serde::{Deserialize, Serialize};
use sleepalign_autodiff::{Tape, Tensor};
use sleepalign_model::{Mode, StagingModel};
use sleepalign_synth::DomainDataset;

use crate::HarnessError;

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITERS: usize = 10_000;
const RANK_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureExport {
    pub feature_dim: usize,
    /// Domain id per epoch row.
    pub domains: Vec<usize>,
    /// Stage label per epoch row.
    pub stages: Vec<u8>,
    /// First principal component score per epoch row.
    pub pc1: Vec<f64>,
    /// Raw features, row-major (rows, feature_dim).
    pub features: Vec<f32>,
    /// Leading eigenvector (the PCA loading), sign-fixed.
    pub loading: Vec<f64>,
    pub eigenvalue: f64,
    /// Set when the pooled covariance is (near) rank-zero and the projection
    /// was forced to zero.
    pub rank_deficient: bool,
}

/// Encode every sequence of every dataset (eval mode), pool the per-epoch
/// features, and project on the first principal component of the pooled
/// covariance (power iteration, deterministic all-ones start, first nonzero
/// loading positive).
pub fn export_features(
    model: &StagingModel<f32>,
    datasets: &[DomainDataset],
) -> Result<FeatureExport, HarnessError> {
    if datasets.is_empty() || datasets.iter().any(|d| d.count == 0) {
        return Err(HarnessError::EmptyDataset);
    }
    let d = model.config().feature_dim;
    let l = model.config().seq_len;
    let mut features: Vec<f32> = Vec::new();
    let mut domains = Vec::new();
    let mut stages = Vec::new();

    for ds in datasets {
        let spec = &ds.spec;
        let chunk = 32usize;
        let mut start = 0;
        while start < ds.count {
            let stop = (start + chunk).min(ds.count);
            let b = stop - start;
            let seq_elems = ds.seq_elems();
            let batch = Tensor::new(
                vec![b, l, spec.samples_per_epoch, spec.channels],
                ds.signals[start * seq_elems..stop * seq_elems].to_vec(),
            );
            let tape = Tape::new();
            let bound = model.bind(&tape);
            let h = bound.encode(tape.constant(&batch), &mut Mode::Eval).value();
            features.extend_from_slice(h.data());
            for s in start..stop {
                for k in 0..l {
                    domains.push(spec.id);
                    stages.push(ds.labels[s * l + k]);
                }
            }
            start = stop;
        }
    }
    let rows = domains.len();
    debug_assert_eq!(features.len(), rows * d);

    // pooled covariance in f64
    let mut mean = vec![0.0f64; d];
    for r in 0..rows {
        for j in 0..d {
            mean[j] += features[r * d + j] as f64;
        }
    }
    for m in mean.iter_mut() {
        *m /= rows as f64;
    }
    let denom = if rows > 1 { (rows - 1) as f64 } else { 1.0 };
    let mut cov = vec![0.0f64; d * d];
    for r in 0..rows {
        for a in 0..d {
            let ca = features[r * d + a] as f64 - mean[a];
            for b in a..d {
                cov[a * d + b] += ca * (features[r * d + b] as f64 - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            cov[a * d + b] /= denom;
            cov[b * d + a] = cov[a * d + b];
        }
    }

    // power iteration from a deterministic start
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut eigenvalue = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let mut next = vec![0.0f64; d];
        for a in 0..d {
            let mut s = 0.0;
            for b in 0..d {
                s += cov[a * d + b] * v[b];
            }
            next[a] = s;
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < RANK_EPS {
            return Ok(finish(
                features, domains, stages, d, vec![0.0; d], 0.0, true,
            ));
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        let delta: f64 = next
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = next;
        eigenvalue = norm;
        if delta < POWER_TOL {
            break;
        }
    }

    // sign convention: first loading with non-negligible magnitude positive
    if let Some(first) = v.iter().find(|x| x.abs() > RANK_EPS) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }

    let mut export = finish(features, domains, stages, d, v, eigenvalue, false);
    for r in 0..rows {
        let mut s = 0.0;
        for j in 0..d {
            s += (export.features[r * d + j] as f64 - mean[j]) * export.loading[j];
        }
        export.pc1[r] = s;
    }
    Ok(export)
}

fn finish(
    features: Vec<f32>,
    domains: Vec<usize>,
    stages: Vec<u8>,
    d: usize,
    loading: Vec<f64>,
    eigenvalue: f64,
    rank_deficient: bool,
) -> FeatureExport {
    let rows = domains.len();
    FeatureExport {
        feature_dim: d,
        domains,
        stages,
        pc1: vec![0.0; rows],
        features,
        loading,
        eigenvalue,
        rank_deficient,
    }
}
