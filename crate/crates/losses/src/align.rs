//! Epoch-level alignment: first- and second-order statistics discrepancies
//! across domain feature banks.

use sleepalign_autodiff::{Real, Var};

use crate::{LossError, PairMode};

fn check_banks<T: Real>(banks: &[Var<'_, T>]) -> Result<usize, LossError> {
    if banks.len() < 2 {
        return Err(LossError::NotEnoughDomains { got: banks.len() });
    }
    let dim = banks[0].shape()[1];
    for (i, bank) in banks.iter().enumerate() {
        let shape = bank.shape();
        assert_eq!(
            shape.len(),
            2,
            "feature bank {i} must be (count, dim), got {:?}",
            shape
        );
        assert_eq!(
            shape[1], dim,
            "feature bank {i} dim {} != {} of bank 0",
            shape[1], dim
        );
        if shape[0] == 0 {
            return Err(LossError::EmptyDomain { index: i });
        }
    }
    Ok(dim)
}

/// Sum over domain pairs of the squared Euclidean distance between mean
/// feature vectors.
pub fn epoch_first_order<'t, T: Real>(
    banks: &[Var<'t, T>],
    pairs: PairMode,
) -> Result<Var<'t, T>, LossError> {
    check_banks(banks)?;
    let means: Vec<Var<'t, T>> = banks.iter().map(|b| b.mean_axis(0)).collect();
    Ok(pairwise_sq_norm_sum(&means, pairs))
}

/// Sum over domain pairs of the squared Frobenius distance between sample
/// covariance matrices (1/(count-1) normalization).
pub fn epoch_second_order<'t, T: Real>(
    banks: &[Var<'t, T>],
    pairs: PairMode,
) -> Result<Var<'t, T>, LossError> {
    check_banks(banks)?;
    let covs: Vec<Var<'t, T>> = banks
        .iter()
        .enumerate()
        .map(|(i, bank)| {
            let rows = bank.shape()[0];
            if rows < 2 {
                return Err(LossError::TooFewSamples { index: i, rows });
            }
            let centered = *bank - bank.mean_axis(0);
            Ok(centered
                .transpose(0, 1)
                .matmul(centered)
                .scale(1.0 / (rows - 1) as f64))
        })
        .collect::<Result<_, _>>()?;
    Ok(pairwise_sq_norm_sum(&covs, pairs))
}

/// Epoch-level alignment: first-order plus second-order discrepancy.
pub fn epoch_level_loss<'t, T: Real>(
    banks: &[Var<'t, T>],
    pairs: PairMode,
) -> Result<Var<'t, T>, LossError> {
    let first = epoch_first_order(banks, pairs)?;
    let second = epoch_second_order(banks, pairs)?;
    Ok(first + second)
}

pub(crate) fn pairwise_sq_norm_sum<'t, T: Real>(items: &[Var<'t, T>], pairs: PairMode) -> Var<'t, T> {
    let mut total: Option<Var<'t, T>> = None;
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            let term = (items[i] - items[j]).sqr().sum_all();
            total = Some(match total {
                Some(t) => t + term,
                None => term,
            });
        }
    }
    let total = total.expect("at least one pair");
    match pairs {
        PairMode::Unordered => total,
        PairMode::Ordered => total.scale(pairs.factor()),
    }
}
