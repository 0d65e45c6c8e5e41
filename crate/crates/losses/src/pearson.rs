//! Sequence-level alignment: inter-epoch Pearson correlation matrices,
//! domain averages, and the pairwise discrepancy loss.

use sleepalign_autodiff::{Real, Tensor, Var};

use crate::align::pairwise_sq_norm_sum;
use crate::{LossError, PairMode};

/// Epsilon guard inside the correlation denominator.
pub const PEARSON_EPS: f64 = 1e-8;

/// Pearson correlation matrix of one sequence of epoch features (L, d):
/// correlations are taken across the d feature coordinates of each pair of
/// epoch vectors. The diagonal is pinned to exactly 1.
pub fn pearson_matrix<'t, T: Real>(seq: Var<'t, T>) -> Var<'t, T> {
    let shape = seq.shape();
    assert_eq!(shape.len(), 2, "pearson_matrix: expected (L, d), got {:?}", shape);
    let (l, d) = (shape[0], shape[1]);
    assert!(l >= 2, "pearson_matrix: need at least 2 epochs, got {l}");
    assert!(d >= 2, "pearson_matrix: need at least 2 feature coords, got {d}");
    pearson_batched(seq.reshape(&[1, l, d])).reshape(&[l, l])
}

/// Batched Pearson matrices: (B, L, d) -> (B, L, L).
pub fn pearson_batched<'t, T: Real>(x: Var<'t, T>) -> Var<'t, T> {
    let shape = x.shape();
    assert_eq!(shape.len(), 3, "pearson_batched: expected (B, L, d), got {:?}", shape);
    let (l, d) = (shape[1], shape[2]);
    assert!(l >= 2 && d >= 2, "pearson_batched: degenerate shape {:?}", shape);
    let centered = x - x.mean_axis(2);
    // covariance (1/d) between epoch vectors, within each sequence
    let cov = centered
        .matmul(centered.transpose(1, 2))
        .scale(1.0 / d as f64);
    let var = centered.sqr().mean_axis(2); // (B, L, 1)
    let denom = var
        .matmul(var.transpose(1, 2))
        .sqrt_guarded(PEARSON_EPS); // (B, L, L)
    let raw = cov / denom;
    // pin the diagonal to exactly 1
    let tape = x.tape();
    let mut off_mask = Tensor::<T>::full(&[l, l], T::ONE);
    let mut eye = Tensor::<T>::zeros(&[l, l]);
    for i in 0..l {
        off_mask.data_mut()[i * l + i] = T::ZERO;
        eye.data_mut()[i * l + i] = T::ONE;
    }
    raw * tape.constant(&off_mask) + tape.constant(&eye)
}

/// Average correlation matrix of one domain's sequences: (B, L, d) -> (L, L).
pub fn domain_correlation<'t, T: Real>(features: Var<'t, T>) -> Result<Var<'t, T>, LossError> {
    let shape = features.shape();
    assert_eq!(
        shape.len(),
        3,
        "domain_correlation: expected (B, L, d), got {:?}",
        shape
    );
    if shape[0] == 0 {
        return Err(LossError::EmptyDomain { index: 0 });
    }
    let l = shape[1];
    Ok(pearson_batched(features).mean_axis(0).reshape(&[l, l]))
}

/// Sum over domain pairs of squared Frobenius distances between averaged
/// correlation matrices.
pub fn sequence_level_loss<'t, T: Real>(
    correlations: &[Var<'t, T>],
    pairs: PairMode,
) -> Result<Var<'t, T>, LossError> {
    if correlations.len() < 2 {
        return Err(LossError::NotEnoughDomains {
            got: correlations.len(),
        });
    }
    let shape = correlations[0].shape();
    for r in correlations {
        assert_eq!(
            r.shape(),
            shape,
            "sequence_level_loss: correlation shapes differ: {:?} vs {:?}",
            r.shape(),
            shape
        );
    }
    Ok(pairwise_sq_norm_sum(correlations, pairs))
}
