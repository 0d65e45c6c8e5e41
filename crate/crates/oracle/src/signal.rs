//! Direct O(n^2) spectral estimate and sliding-window convolution references.

use std::f64::consts::PI;

/// Periodogram by direct DFT: power at bins 0..n/2 (inclusive).
pub fn periodogram(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut power = Vec::with_capacity(n / 2 + 1);
    for k in 0..=n / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (t, &x) in signal.iter().enumerate() {
            let ang = -2.0 * PI * (k * t) as f64 / n as f64;
            re += x * ang.cos();
            im += x * ang.sin();
        }
        power.push((re * re + im * im) / n as f64);
    }
    power
}

/// Index of the strongest nonzero-frequency bin.
pub fn peak_bin(power: &[f64]) -> usize {
    let mut best = 1;
    for k in 2..power.len() {
        if power[k] > power[best] {
            best = k;
        }
    }
    best
}

/// 1-D cross-correlation style convolution, zero padded:
/// `x` is `(batch, c_in, width)`, `w` is `(c_out, c_in, k)`, output
/// `(batch, c_out, w_out)` with `w_out = (width + 2*pad - k)/stride + 1`.
pub fn conv1d(
    x: &[f64],
    batch: usize,
    c_in: usize,
    width: usize,
    w: &[f64],
    c_out: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Vec<f64> {
    assert_eq!(x.len(), batch * c_in * width);
    assert_eq!(w.len(), c_out * c_in * k);
    let w_out = (width + 2 * pad - k) / stride + 1;
    let mut out = vec![0.0; batch * c_out * w_out];
    for b in 0..batch {
        for co in 0..c_out {
            for ow in 0..w_out {
                let mut s = 0.0;
                for ci in 0..c_in {
                    for t in 0..k {
                        let iw = (ow * stride + t) as isize - pad as isize;
                        if iw >= 0 && (iw as usize) < width {
                            s += x[(b * c_in + ci) * width + iw as usize]
                                * w[(co * c_in + ci) * k + t];
                        }
                    }
                }
                out[(b * c_out + co) * w_out + ow] = s;
            }
        }
    }
    out
}

/// Transposed 1-D convolution (scatter form): `x` is `(batch, c_in, width)`,
/// `w` is `(c_in, c_out, k)`, output `(batch, c_out, (width-1)*stride - 2*pad + k)`.
pub fn conv1d_transpose(
    x: &[f64],
    batch: usize,
    c_in: usize,
    width: usize,
    w: &[f64],
    c_out: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Vec<f64> {
    assert_eq!(x.len(), batch * c_in * width);
    assert_eq!(w.len(), c_in * c_out * k);
    let w_out = (width - 1) * stride + k - 2 * pad;
    let mut out = vec![0.0; batch * c_out * w_out];
    for b in 0..batch {
        for ci in 0..c_in {
            for iw in 0..width {
                for co in 0..c_out {
                    for t in 0..k {
                        let ow = (iw * stride + t) as isize - pad as isize;
                        if ow >= 0 && (ow as usize) < w_out {
                            out[(b * c_out + co) * w_out + ow as usize] +=
                                x[(b * c_in + ci) * width + iw] * w[(ci * c_out + co) * k + t];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Stationary distribution of a row-stochastic matrix by repeated squaring of
/// the transition applied to a uniform start.
pub fn markov_stationary(p: &[f64], states: usize, iters: usize) -> Vec<f64> {
    assert_eq!(p.len(), states * states);
    let mut dist = vec![1.0 / states as f64; states];
    for _ in 0..iters {
        let mut next = vec![0.0; states];
        for i in 0..states {
            for j in 0..states {
                next[j] += dist[i] * p[i * states + j];
            }
        }
        dist = next;
    }
    dist
}

/// Pearson chi-squared statistic for observed counts against expected
/// probabilities.
pub fn chi_squared(observed: &[u64], expected_probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (o, p) in observed.iter().zip(expected_probs.iter()) {
        let e = total as f64 * p;
        let d = *o as f64 - e;
        stat += d * d / e;
    }
    stat
}
