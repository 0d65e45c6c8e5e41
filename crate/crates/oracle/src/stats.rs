//! First/second-order statistics and Pearson correlation, one scalar at a time.

/// Column means of a `rows x cols` bank stored row-major.
pub fn mean_rows(bank: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(bank.len(), rows * cols);
    let mut out = vec![0.0; cols];
    for j in 0..cols {
        let mut s = 0.0;
        for i in 0..rows {
            s += bank[i * cols + j];
        }
        out[j] = s / rows as f64;
    }
    out
}

/// Sample covariance (1/(rows-1)) of a `rows x cols` bank, two-pass.
/// Returns a `cols x cols` matrix, row-major.
pub fn covariance(bank: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert!(rows >= 2, "covariance needs at least 2 rows");
    let mu = mean_rows(bank, rows, cols);
    let mut cov = vec![0.0; cols * cols];
    for a in 0..cols {
        for b in 0..cols {
            let mut s = 0.0;
            for i in 0..rows {
                s += (bank[i * cols + a] - mu[a]) * (bank[i * cols + b] - mu[b]);
            }
            cov[a * cols + b] = s / (rows - 1) as f64;
        }
    }
    cov
}

/// Squared Euclidean distance between two vectors.
pub fn sq_euclid(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Squared Frobenius norm of the elementwise difference of two matrices.
pub fn frob_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    sq_euclid(a, b)
}

/// Pearson correlation matrix of `seq_len` vectors of dimension `dim`
/// (row-major `seq_len x dim`). Variance/covariance are taken across the
/// `dim` coordinates with 1/dim normalization; the denominator carries an
/// epsilon guard and the diagonal is pinned to exactly 1.
pub fn pearson_matrix(seq: &[f64], seq_len: usize, dim: usize, eps: f64) -> Vec<f64> {
    assert_eq!(seq.len(), seq_len * dim);
    let mut mu = vec![0.0; seq_len];
    for k in 0..seq_len {
        let mut s = 0.0;
        for t in 0..dim {
            s += seq[k * dim + t];
        }
        mu[k] = s / dim as f64;
    }
    let mut var = vec![0.0; seq_len];
    for k in 0..seq_len {
        let mut s = 0.0;
        for t in 0..dim {
            let d = seq[k * dim + t] - mu[k];
            s += d * d;
        }
        var[k] = s / dim as f64;
    }
    let mut out = vec![0.0; seq_len * seq_len];
    for k in 0..seq_len {
        for t in 0..seq_len {
            if k == t {
                out[k * seq_len + t] = 1.0;
                continue;
            }
            let mut cov = 0.0;
            for c in 0..dim {
                cov += (seq[k * dim + c] - mu[k]) * (seq[t * dim + c] - mu[t]);
            }
            cov /= dim as f64;
            out[k * seq_len + t] = cov / (var[k] * var[t] + eps).sqrt();
        }
    }
    out
}

/// Gaussian-kernel squared MMD (biased V-statistic) between two banks with a
/// fixed squared bandwidth.
pub fn mmd_sq(xs: &[f64], nx: usize, ys: &[f64], ny: usize, dim: usize, bw_sq: f64) -> f64 {
    let k = |a: &[f64], b: &[f64]| -> f64 { (-sq_euclid(a, b) / (2.0 * bw_sq)).exp() };
    fn row(bank: &[f64], i: usize, dim: usize) -> &[f64] {
        &bank[i * dim..(i + 1) * dim]
    }
    let mut kxx = 0.0;
    for i in 0..nx {
        for j in 0..nx {
            kxx += k(row(xs, i, dim), row(xs, j, dim));
        }
    }
    let mut kyy = 0.0;
    for i in 0..ny {
        for j in 0..ny {
            kyy += k(row(ys, i, dim), row(ys, j, dim));
        }
    }
    let mut kxy = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            kxy += k(row(xs, i, dim), row(ys, j, dim));
        }
    }
    kxx / (nx * nx) as f64 + kyy / (ny * ny) as f64 - 2.0 * kxy / (nx * ny) as f64
}

/// Median of the nonzero pairwise squared distances over the pooled rows of
/// two banks (upper median of the sorted list).
pub fn median_pairwise_sq_dist(xs: &[f64], nx: usize, ys: &[f64], ny: usize, dim: usize) -> f64 {
    let mut pooled = Vec::with_capacity((nx + ny) * dim);
    pooled.extend_from_slice(xs);
    pooled.extend_from_slice(ys);
    let n = nx + ny;
    let mut dists = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_euclid(
                &pooled[i * dim..(i + 1) * dim],
                &pooled[j * dim..(j + 1) * dim],
            ));
        }
    }
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dists[dists.len() / 2]
}
