//! Baseline DG losses: Gaussian-kernel MMD and CORAL.

use sleepalign_autodiff::{Real, Var};

use crate::align::epoch_second_order;
use crate::{LossError, PairMode};

/// Standard CORAL scaling for feature dimension `d`.
pub fn coral_scale(dim: usize) -> f64 {
    1.0 / (4.0 * (dim * dim) as f64)
}

/// CORAL: covariance discrepancy with 1/(4 d^2) scaling.
pub fn coral_loss<'t, T: Real>(
    banks: &[Var<'t, T>],
    pairs: PairMode,
) -> Result<Var<'t, T>, LossError> {
    let dim = banks
        .first()
        .map(|b| b.shape()[1])
        .ok_or(LossError::NotEnoughDomains { got: 0 })?;
    Ok(epoch_second_order(banks, pairs)?.scale(coral_scale(dim)))
}

/// Upper median of all pairwise squared distances (i < j) over the pooled
/// rows of two banks, computed on forward values. Used as the squared
/// bandwidth; gradient does not flow through it.
pub fn median_sq_distance<T: Real>(a: &Var<'_, T>, b: &Var<'_, T>) -> f64 {
    let (va, vb) = (a.value(), b.value());
    let dim = va.shape()[1];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for bank in [&va, &vb] {
        for r in 0..bank.shape()[0] {
            rows.push(
                bank.data()[r * dim..(r + 1) * dim]
                    .iter()
                    .map(|v| v.to_f64())
                    .collect(),
            );
        }
    }
    let mut dists = Vec::new();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let d: f64 = rows[i]
                .iter()
                .zip(rows[j].iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(d);
        }
    }
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
    dists[dists.len() / 2]
}

/// Squared MMD (biased V-statistic) between two banks with a fixed squared
/// bandwidth. Exposed separately so gradient checks can hold the bandwidth
/// constant.
pub fn mmd_pair_fixed_bandwidth<'t, T: Real>(
    a: Var<'t, T>,
    b: Var<'t, T>,
    bw_sq: f64,
) -> Var<'t, T> {
    let kxx = gaussian_gram(a, a, bw_sq).mean_all();
    let kyy = gaussian_gram(b, b, bw_sq).mean_all();
    let kxy = gaussian_gram(a, b, bw_sq).mean_all();
    kxx + kyy - kxy.scale(2.0)
}

fn gaussian_gram<'t, T: Real>(a: Var<'t, T>, b: Var<'t, T>, bw_sq: f64) -> Var<'t, T> {
    // ||x-y||^2 = ||x||^2 + ||y||^2 - 2 x.y
    let na = a.sqr().sum_axis(1); // (m,1)
    let nb = b.sqr().sum_axis(1).transpose(0, 1); // (1,n)
    let cross = a.matmul(b.transpose(0, 1)); // (m,n)
    let sq = na + nb - cross.scale(2.0);
    sq.scale(-1.0 / (2.0 * bw_sq)).exp()
}

/// Pairwise-summed squared MMD over domain banks, Gaussian kernel with the
/// median heuristic per pair. A degenerate zero median falls back to unit
/// bandwidth.
pub fn mmd_loss<'t, T: Real>(
    banks: &[Var<'t, T>],
    pairs: PairMode,
) -> Result<Var<'t, T>, LossError> {
    if banks.len() < 2 {
        return Err(LossError::NotEnoughDomains { got: banks.len() });
    }
    for (i, bank) in banks.iter().enumerate() {
        if bank.shape()[0] == 0 {
            return Err(LossError::EmptyDomain { index: i });
        }
    }
    let mut total: Option<Var<'t, T>> = None;
    for i in 0..banks.len() {
        for j in (i + 1)..banks.len() {
            let med = median_sq_distance(&banks[i], &banks[j]);
            let bw_sq = if med > 0.0 { med } else { 1.0 };
            let term = mmd_pair_fixed_bandwidth(banks[i], banks[j], bw_sq);
            total = Some(match total {
                Some(t) => t + term,
                None => term,
            });
        }
    }
    let total = total.expect("at least one pair");
    Ok(match pairs {
        PairMode::Unordered => total,
        PairMode::Ordered => total.scale(pairs.factor()),
    })
}
