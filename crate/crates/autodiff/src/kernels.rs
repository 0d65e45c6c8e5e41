//! Inner loops shared by the tape ops.
//!
//! Reductions use a fixed 8-lane accumulator split (then a fixed combine
//! order), and accumulation loops are written in saxpy form; both keep
//! results bit-deterministic for a given build while letting the compiler
//! vectorize.

use crate::real::Real;

pub const LANES: usize = 8;

/// Dot product with a fixed 8-way accumulator split.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < LANES {
        let mut s = T::ZERO;
        for i in 0..n {
            s += a[i] * b[i];
        }
        return s;
    }
    let chunks = n / LANES;
    let mut acc = [T::ZERO; LANES];
    for c in 0..chunks {
        let base = c * LANES;
        for l in 0..LANES {
            acc[l] += a[base + l] * b[base + l];
        }
    }
    let mut tail = T::ZERO;
    for i in chunks * LANES..n {
        tail += a[i] * b[i];
    }
    let mut s = T::ZERO;
    for l in 0..LANES {
        s += acc[l];
    }
    s + tail
}

/// Sum with the same fixed lane split as `dot`.
pub fn sum<T: Real>(a: &[T]) -> T {
    let n = a.len();
    if n < LANES {
        let mut s = T::ZERO;
        for &v in a {
            s += v;
        }
        return s;
    }
    let chunks = n / LANES;
    let mut acc = [T::ZERO; LANES];
    for c in 0..chunks {
        let base = c * LANES;
        for l in 0..LANES {
            acc[l] += a[base + l];
        }
    }
    let mut tail = T::ZERO;
    for i in chunks * LANES..n {
        tail += a[i];
    }
    let mut s = T::ZERO;
    for l in 0..LANES {
        s += acc[l];
    }
    s + tail
}

/// y += alpha * x
pub fn axpy<T: Real>(y: &mut [T], alpha: T, x: &[T]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * *xi;
    }
}

#[inline]
fn is_f32<T: 'static>() -> bool {
    std::any::TypeId::of::<T>() == std::any::TypeId::of::<f32>()
}

/// Reinterpret as f32; caller must have checked `is_f32::<T>()`.
#[inline]
fn as_f32<T>(s: &[T]) -> &[f32] {
    unsafe { std::slice::from_raw_parts(s.as_ptr() as *const f32, s.len()) }
}

#[inline]
fn as_f32_mut<T>(s: &mut [T]) -> &mut [f32] {
    unsafe { std::slice::from_raw_parts_mut(s.as_mut_ptr() as *mut f32, s.len()) }
}

/// C (m,n) += A (m,k) @ B (k,n).
pub fn mm_nn<T: Real>(c: &mut [T], a: &[T], b: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(c.len(), m * n);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    if is_f32::<T>() {
        return mm_nn_f32(as_f32_mut(c), as_f32(a), as_f32(b), m, k, n);
    }
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            axpy(crow, a[i * k + p], &b[p * n..(p + 1) * n]);
        }
    }
}

/// Row-blocked f32 kernel: four output rows share each loaded B row.
fn mm_nn_f32(c: &mut [f32], a: &[f32], b: &[f32], m: usize, k: usize, n: usize) {
    let mut i = 0;
    while i + 4 <= m {
        let (c0, rest) = c[i * n..].split_at_mut(n);
        let (c1, rest) = rest.split_at_mut(n);
        let (c2, rest) = rest.split_at_mut(n);
        let c3 = &mut rest[..n];
        for p in 0..k {
            let a0 = a[i * k + p];
            let a1 = a[(i + 1) * k + p];
            let a2 = a[(i + 2) * k + p];
            let a3 = a[(i + 3) * k + p];
            let brow = &b[p * n..(p + 1) * n];
            for j in 0..n {
                let bv = brow[j];
                c0[j] += a0 * bv;
                c1[j] += a1 * bv;
                c2[j] += a2 * bv;
                c3[j] += a3 * bv;
            }
        }
        i += 4;
    }
    for i in i..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            axpy(crow, a[i * k + p], &b[p * n..(p + 1) * n]);
        }
    }
}

/// C (m,k) += A (m,n) @ B^T where B is (k,n).
pub fn mm_nt<T: Real>(c: &mut [T], a: &[T], b: &[T], m: usize, n: usize, k: usize) {
    debug_assert_eq!(c.len(), m * k);
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    if is_f32::<T>() {
        return mm_nt_f32(as_f32_mut(c), as_f32(a), as_f32(b), m, n, k);
    }
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for p in 0..k {
            c[i * k + p] += dot(arow, &b[p * n..(p + 1) * n]);
        }
    }
}

fn mm_nt_f32(c: &mut [f32], a: &[f32], b: &[f32], m: usize, n: usize, k: usize) {
    let mut i = 0;
    while i + 2 <= m {
        let a0 = &a[i * n..(i + 1) * n];
        let a1 = &a[(i + 1) * n..(i + 2) * n];
        let mut p = 0;
        while p + 2 <= k {
            let b0 = &b[p * n..(p + 1) * n];
            let b1 = &b[(p + 1) * n..(p + 2) * n];
            let (mut s00, mut s01, mut s10, mut s11) = (0.0f32, 0.0, 0.0, 0.0);
            for j in 0..n {
                s00 += a0[j] * b0[j];
                s01 += a0[j] * b1[j];
                s10 += a1[j] * b0[j];
                s11 += a1[j] * b1[j];
            }
            c[i * k + p] += s00;
            c[i * k + p + 1] += s01;
            c[(i + 1) * k + p] += s10;
            c[(i + 1) * k + p + 1] += s11;
            p += 2;
        }
        for p in p..k {
            let brow = &b[p * n..(p + 1) * n];
            c[i * k + p] += dot(a0, brow);
            c[(i + 1) * k + p] += dot(a1, brow);
        }
        i += 2;
    }
    for i in i..m {
        let arow = &a[i * n..(i + 1) * n];
        for p in 0..k {
            c[i * k + p] += dot(arow, &b[p * n..(p + 1) * n]);
        }
    }
}

/// C (k,n) += A^T @ G where A is (m,k), G is (m,n).
pub fn mm_tn<T: Real>(c: &mut [T], a: &[T], g: &[T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(c.len(), k * n);
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(g.len(), m * n);
    if is_f32::<T>() {
        return mm_tn_f32(as_f32_mut(c), as_f32(a), as_f32(g), m, k, n);
    }
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            axpy(&mut c[p * n..(p + 1) * n], a[i * k + p], grow);
        }
    }
}

fn mm_tn_f32(c: &mut [f32], a: &[f32], g: &[f32], m: usize, k: usize, n: usize) {
    let mut i = 0;
    while i + 4 <= m {
        let g0 = &g[i * n..(i + 1) * n];
        let g1 = &g[(i + 1) * n..(i + 2) * n];
        let g2 = &g[(i + 2) * n..(i + 3) * n];
        let g3 = &g[(i + 3) * n..(i + 4) * n];
        for p in 0..k {
            let a0 = a[i * k + p];
            let a1 = a[(i + 1) * k + p];
            let a2 = a[(i + 2) * k + p];
            let a3 = a[(i + 3) * k + p];
            let crow = &mut c[p * n..(p + 1) * n];
            for j in 0..n {
                crow[j] += a0 * g0[j] + a1 * g1[j] + a2 * g2[j] + a3 * g3[j];
            }
        }
        i += 4;
    }
    for i in i..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            axpy(&mut c[p * n..(p + 1) * n], a[i * k + p], grow);
        }
    }
}

/// Output width of a 1-D convolution.
pub fn conv_out_width(width: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    assert!(
        width + 2 * pad >= kernel,
        "conv1d: width {} + 2*pad {} shorter than kernel {}",
        width,
        pad,
        kernel
    );
    (width + 2 * pad - kernel) / stride + 1
}

/// Output width of a transposed 1-D convolution.
pub fn conv_transpose_out_width(width: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    assert!(
        (width - 1) * stride + kernel > 2 * pad,
        "conv1d_transpose: output width would be non-positive"
    );
    (width - 1) * stride + kernel - 2 * pad
}

/// Range of loop positions `i` in `[0, loop_len)` keeping the strided index
/// `i*stride + t - pad` inside `[0, bound)`.
fn valid_range(bound: usize, loop_len: usize, t: usize, stride: usize, pad: usize) -> (usize, usize) {
    let lo = if t >= pad {
        0
    } else {
        (pad - t + stride - 1) / stride
    };
    let max_idx = bound as isize - 1 + pad as isize - t as isize;
    if max_idx < 0 {
        return (0, 0);
    }
    let hi = ((max_idx as usize) / stride + 1).min(loop_len);
    (lo.min(hi), hi)
}

/// Gather one batch item into im2col layout: rows are (c_in, tap), columns
/// are output positions. `cols` must hold `c_in * kernel * w_out`.
fn im2col<T: Real>(
    x: &[T],
    width: usize,
    c_in: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    w_out: usize,
    cols: &mut [T],
) {
    for v in cols.iter_mut() {
        *v = T::ZERO;
    }
    for ci in 0..c_in {
        let xrow = &x[ci * width..(ci + 1) * width];
        for t in 0..kernel {
            let (lo, hi) = valid_range(width, w_out, t, stride, pad);
            if lo >= hi {
                continue;
            }
            let x_start = lo * stride + t - pad;
            let crow = &mut cols[(ci * kernel + t) * w_out..(ci * kernel + t + 1) * w_out];
            if stride == 1 {
                crow[lo..hi].copy_from_slice(&xrow[x_start..x_start + (hi - lo)]);
            } else {
                for (i, slot) in crow[lo..hi].iter_mut().enumerate() {
                    *slot = xrow[x_start + i * stride];
                }
            }
        }
    }
}

/// Scatter-add an im2col buffer back onto the input layout.
fn col2im<T: Real>(
    cols: &[T],
    width: usize,
    c_in: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    w_out: usize,
    x: &mut [T],
) {
    for ci in 0..c_in {
        let xrow = &mut x[ci * width..(ci + 1) * width];
        for t in 0..kernel {
            let (lo, hi) = valid_range(width, w_out, t, stride, pad);
            if lo >= hi {
                continue;
            }
            let x_start = lo * stride + t - pad;
            let crow = &cols[(ci * kernel + t) * w_out..(ci * kernel + t + 1) * w_out];
            if stride == 1 {
                axpy(&mut xrow[x_start..x_start + (hi - lo)], T::ONE, &crow[lo..hi]);
            } else {
                for (i, v) in crow[lo..hi].iter().enumerate() {
                    xrow[x_start + i * stride] += *v;
                }
            }
        }
    }
}

/// Forward conv: x (batch, c_in, width), w (c_out, c_in, k) -> (batch, c_out, w_out).
/// im2col + matmul so the inner loops vectorize.
pub fn conv1d<T: Real>(
    x: &[T],
    batch: usize,
    c_in: usize,
    width: usize,
    w: &[T],
    c_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let w_out = conv_out_width(width, kernel, stride, pad);
    let ck = c_in * kernel;
    let mut out = vec![T::ZERO; batch * c_out * w_out];
    let mut cols = vec![T::ZERO; ck * w_out];
    for b in 0..batch {
        im2col(
            &x[b * c_in * width..(b + 1) * c_in * width],
            width,
            c_in,
            kernel,
            stride,
            pad,
            w_out,
            &mut cols,
        );
        // (c_out, ck) @ (ck, w_out)
        mm_nn(
            &mut out[b * c_out * w_out..(b + 1) * c_out * w_out],
            w,
            &cols,
            c_out,
            ck,
            w_out,
        );
    }
    out
}

/// Gradient of conv w.r.t. its input: dX = col2im(W^T @ G).
pub fn conv1d_grad_input<T: Real>(
    grad: &[T],
    batch: usize,
    c_in: usize,
    width: usize,
    w: &[T],
    c_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let w_out = conv_out_width(width, kernel, stride, pad);
    debug_assert_eq!(grad.len(), batch * c_out * w_out);
    let ck = c_in * kernel;
    let mut dx = vec![T::ZERO; batch * c_in * width];
    let mut cols = vec![T::ZERO; ck * w_out];
    for b in 0..batch {
        for v in cols.iter_mut() {
            *v = T::ZERO;
        }
        // (ck, w_out) = (c_out, ck)^T @ (c_out, w_out)
        mm_tn(
            &mut cols,
            w,
            &grad[b * c_out * w_out..(b + 1) * c_out * w_out],
            c_out,
            ck,
            w_out,
        );
        col2im(
            &cols,
            width,
            c_in,
            kernel,
            stride,
            pad,
            w_out,
            &mut dx[b * c_in * width..(b + 1) * c_in * width],
        );
    }
    dx
}

/// Gradient of conv w.r.t. its kernel: dW = sum_b G_b @ cols_b^T.
pub fn conv1d_grad_kernel<T: Real>(
    grad: &[T],
    x: &[T],
    batch: usize,
    c_in: usize,
    width: usize,
    c_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let w_out = conv_out_width(width, kernel, stride, pad);
    let ck = c_in * kernel;
    let mut dw = vec![T::ZERO; c_out * ck];
    let mut cols = vec![T::ZERO; ck * w_out];
    for b in 0..batch {
        im2col(
            &x[b * c_in * width..(b + 1) * c_in * width],
            width,
            c_in,
            kernel,
            stride,
            pad,
            w_out,
            &mut cols,
        );
        // (c_out, ck) += (c_out, w_out) @ (ck, w_out)^T
        mm_nt(
            &mut dw,
            &grad[b * c_out * w_out..(b + 1) * c_out * w_out],
            &cols,
            c_out,
            w_out,
            ck,
        );
    }
    dw
}

/// Transposed conv forward: x (batch, c_in, width), w (c_in, c_out, k)
/// -> (batch, c_out, w_out).
///
/// A transposed conv is exactly the input-gradient of the matching forward
/// conv (kernel laid out as (c_in, c_out, k)), so the three kernels below
/// delegate to the im2col-based conv kernels with the roles swapped.
pub fn conv1d_transpose<T: Real>(
    x: &[T],
    batch: usize,
    c_in: usize,
    width: usize,
    w: &[T],
    c_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let w_out = conv_transpose_out_width(width, kernel, stride, pad);
    debug_assert_eq!(x.len(), batch * c_in * width);
    conv1d_grad_input(x, batch, c_out, w_out, w, c_in, kernel, stride, pad)
}

/// Gradient of transposed conv w.r.t. its input (a plain gather conv).
pub fn conv1d_transpose_grad_input<T: Real>(
    grad: &[T],
    batch: usize,
    c_in: usize,
    width: usize,
    w: &[T],
    c_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let w_out = conv_transpose_out_width(width, kernel, stride, pad);
    debug_assert_eq!(grad.len(), batch * c_out * w_out);
    let _ = width;
    conv1d(grad, batch, c_out, w_out, w, c_in, kernel, stride, pad)
}

/// Gradient of transposed conv w.r.t. its kernel.
pub fn conv1d_transpose_grad_kernel<T: Real>(
    grad: &[T],
    x: &[T],
    batch: usize,
    c_in: usize,
    width: usize,
    c_out: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let w_out = conv_transpose_out_width(width, kernel, stride, pad);
    let _ = (c_in, width);
    // roles swapped: grad plays the conv input, x plays the output grad
    conv1d_grad_kernel(x, grad, batch, c_out, w_out, c_in, kernel, stride, pad)
}
