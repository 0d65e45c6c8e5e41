//! Reconstruction, classification and the weighted total.

use sleepalign_autodiff::{Real, Tensor, Var};

use crate::{LossError, LossWeights};

/// Probability floor inside the cross-entropy log.
pub const CE_GUARD: f64 = 1e-12;

/// Mean over the batch of (1/L) * sum over epochs of the squared Euclidean
/// norm of the per-epoch residual. Inputs are (batch, L, n, C).
pub fn reconstruction_loss<'t, T: Real>(x: Var<'t, T>, xhat: Var<'t, T>) -> Var<'t, T> {
    let shape = x.shape();
    assert_eq!(
        shape.len(),
        4,
        "reconstruction_loss: expected (batch, L, n, C), got {:?}",
        shape
    );
    assert_eq!(
        shape,
        xhat.shape(),
        "reconstruction_loss: shape mismatch {:?} vs {:?}",
        shape,
        xhat.shape()
    );
    let (batch, seq_len) = (shape[0], shape[1]);
    (x - xhat)
        .sqr()
        .sum_all()
        .scale(1.0 / (batch * seq_len) as f64)
}

/// Cross-entropy against one-hot labels: per sequence, sum over the L epochs
/// and classes of -y*ln(max(p, guard)); mean over the batch.
pub fn classification_loss<'t, T: Real>(
    probs: Var<'t, T>,
    labels: &Tensor<T>,
) -> Result<Var<'t, T>, LossError> {
    let shape = probs.shape();
    assert_eq!(
        shape.len(),
        3,
        "classification_loss: expected (batch, L, classes), got {:?}",
        shape
    );
    assert_eq!(
        shape,
        labels.shape(),
        "classification_loss: probs {:?} vs labels {:?}",
        shape,
        labels.shape()
    );
    let (batch, seq_len, classes) = (shape[0], shape[1], shape[2]);
    for b in 0..batch {
        for k in 0..seq_len {
            let row = &labels.data()[(b * seq_len + k) * classes..(b * seq_len + k + 1) * classes];
            let ones = row.iter().filter(|v| **v == T::ONE).count();
            let zeros = row.iter().filter(|v| **v == T::ZERO).count();
            if ones != 1 || zeros != classes - 1 {
                return Err(LossError::LabelNotOneHot { batch: b, epoch: k });
            }
        }
    }
    let y = probs.tape().constant(labels);
    Ok((y * probs.ln_guarded(CE_GUARD))
        .sum_all()
        .neg()
        .scale(1.0 / batch as f64))
}

/// Weighted sum of the supplied terms. Pass `None` for a term an arm leaves
/// out entirely; a weighted term is only added when present, so a run with a
/// term absent is structurally identical to one never computing it.
pub fn total_loss<'t, T: Real>(
    classification: Var<'t, T>,
    reconstruction: Option<Var<'t, T>>,
    epoch: Option<Var<'t, T>>,
    sequence: Option<Var<'t, T>>,
    weights: &LossWeights,
) -> Result<Var<'t, T>, LossError> {
    weights.validate()?;
    check_finite("classification", classification)?;
    let mut total = classification;
    if let Some(rec) = reconstruction {
        check_finite("reconstruction", rec)?;
        total = total + rec.scale(weights.reconstruction);
    }
    if let Some(ep) = epoch {
        check_finite("epoch", ep)?;
        total = total + ep.scale(weights.epoch);
    }
    if let Some(sq) = sequence {
        check_finite("sequence", sq)?;
        total = total + sq.scale(weights.sequence);
    }
    Ok(total)
}

fn check_finite<T: Real>(term: &'static str, v: Var<'_, T>) -> Result<(), LossError> {
    let value = v.scalar_value().to_f64();
    if value.is_finite() {
        Ok(())
    } else {
        Err(LossError::NonFinite { term, value })
    }
}
