//! Forward primitives and their backward rules.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::kernels;
use crate::real::Real;
use crate::tape::{BackFn, Var};
use crate::tensor::{numel, Tensor};

// ---------------------------------------------------------------------------
// Broadcast helpers
// ---------------------------------------------------------------------------

fn pad_left(shape: &[usize], ndim: usize) -> Vec<usize> {
    let mut out = vec![1; ndim];
    out[ndim - shape.len()..].copy_from_slice(shape);
    out
}

pub(crate) fn broadcast_shape(op: &str, a: &[usize], b: &[usize]) -> Vec<usize> {
    let ndim = a.len().max(b.len());
    let pa = pad_left(a, ndim);
    let pb = pad_left(b, ndim);
    let mut out = vec![0; ndim];
    for d in 0..ndim {
        out[d] = match (pa[d], pb[d]) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => panic!("{op}: shapes {:?} and {:?} are not broadcastable", a, b),
        };
    }
    out
}

/// Row-major strides with zeros on broadcast (size-1) dims, for an input
/// shape padded to the output rank.
fn broadcast_strides(in_shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let ndim = out_shape.len();
    let padded = pad_left(in_shape, ndim);
    let mut strides = vec![0usize; ndim];
    let mut acc = 1;
    for d in (0..ndim).rev() {
        strides[d] = if padded[d] == 1 { 0 } else { acc };
        acc *= padded[d];
    }
    strides
}

/// Walk all output positions, yielding flat offsets into two broadcast inputs.
/// Same-shape inputs take a plain (vectorizable) loop.
fn zip_broadcast<T: Real>(
    a: &[T],
    a_shape: &[usize],
    b: &[T],
    b_shape: &[usize],
    out_shape: &[usize],
    mut f: impl FnMut(usize, T, T),
) {
    if a_shape == b_shape {
        for i in 0..a.len() {
            f(i, a[i], b[i]);
        }
        return;
    }
    let n = numel(out_shape);
    let ndim = out_shape.len();
    let sa = broadcast_strides(a_shape, out_shape);
    let sb = broadcast_strides(b_shape, out_shape);
    // Contiguous tail: innermost output dims along which each input either
    // advances densely or stays constant (broadcast), so the walk can run a
    // flat inner loop. Each side must be all-dense or all-constant over the
    // tail.
    let mut tail = 1usize;
    let mut outer_dims = ndim;
    let (mut a_dense, mut b_dense) = (true, true);
    for d in (0..ndim).rev() {
        if out_shape[d] == 1 {
            outer_dims = d;
            continue;
        }
        let da = sa[d] == tail && a_dense;
        let ca = sa[d] == 0 && (tail == 1 || !a_dense);
        let db = sb[d] == tail && b_dense;
        let cb = sb[d] == 0 && (tail == 1 || !b_dense);
        if (da || ca) && (db || cb) {
            a_dense = da;
            b_dense = db;
            tail *= out_shape[d];
            outer_dims = d;
        } else {
            break;
        }
    }
    let mut counters = vec![0usize; outer_dims];
    let (mut oa, mut ob) = (0usize, 0usize);
    for outer in 0..n / tail {
        let base = outer * tail;
        match (a_dense || tail == 1, b_dense || tail == 1) {
            (true, true) => {
                for i in 0..tail {
                    f(base + i, a[oa + i], b[ob + i]);
                }
            }
            (true, false) => {
                let bv = b[ob];
                for i in 0..tail {
                    f(base + i, a[oa + i], bv);
                }
            }
            (false, true) => {
                let av = a[oa];
                for i in 0..tail {
                    f(base + i, av, b[ob + i]);
                }
            }
            (false, false) => {
                let (av, bv) = (a[oa], b[ob]);
                for i in 0..tail {
                    f(base + i, av, bv);
                }
            }
        }
        for d in (0..outer_dims).rev() {
            counters[d] += 1;
            oa += sa[d];
            ob += sb[d];
            if counters[d] == out_shape[d] {
                counters[d] = 0;
                oa -= sa[d] * out_shape[d];
                ob -= sb[d] * out_shape[d];
            } else {
                break;
            }
        }
    }
}

/// Sum `grad` (shaped `from`) down to `to` (a broadcast-compatible shape).
pub(crate) fn reduce_to_shape<T: Real>(grad: &[T], from: &[usize], to: &[usize]) -> Vec<T> {
    if from == to {
        return grad.to_vec();
    }
    let ndim = from.len();
    let strides = broadcast_strides(to, from);
    let to_numel = numel(to);
    let mut out = vec![T::ZERO; to_numel];

    // dense suffix reduced only over leading dims: out += each chunk
    let mut dense = 1usize;
    let mut d = ndim;
    while d > 0 && (strides[d - 1] == dense || from[d - 1] == 1) {
        if from[d - 1] != 1 {
            dense *= from[d - 1];
        }
        d -= 1;
    }
    if d == 0 || strides[..d].iter().all(|s| *s == 0) {
        debug_assert_eq!(dense, to_numel);
        for chunk in grad.chunks_exact(to_numel) {
            kernels::axpy(&mut out, T::ONE, chunk);
        }
        return out;
    }

    // fully-reduced suffix: row sums into a walked output slot
    let mut reduced = 1usize;
    let mut rd = ndim;
    while rd > 0 && (strides[rd - 1] == 0 || from[rd - 1] == 1) {
        reduced *= from[rd - 1];
        rd -= 1;
    }
    if reduced > 1 {
        let mut counters = vec![0usize; rd];
        let mut ot = 0usize;
        for chunk in grad.chunks_exact(reduced) {
            out[ot] += kernels::sum(chunk);
            for d in (0..rd).rev() {
                counters[d] += 1;
                ot += strides[d];
                if counters[d] == from[d] {
                    counters[d] = 0;
                    ot -= strides[d] * from[d];
                } else {
                    break;
                }
            }
        }
        return out;
    }

    // general walk
    let mut counters = vec![0usize; ndim];
    let mut ot = 0usize;
    for g in grad.iter() {
        out[ot] += *g;
        for d in (0..ndim).rev() {
            counters[d] += 1;
            ot += strides[d];
            if counters[d] == from[d] {
                counters[d] = 0;
                ot -= strides[d] * from[d];
            } else {
                break;
            }
        }
    }
    out
}

/// Split a shape at `axis` into (outer, len, inner) extents.
fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    assert!(axis < shape.len(), "axis {} out of rank {}", axis, shape.len());
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

// ---------------------------------------------------------------------------
// Elementwise binary ops
// ---------------------------------------------------------------------------

macro_rules! impl_std_op {
    ($trait:ident, $fn:ident, $method:ident) => {
        impl<'t, T: Real> std::ops::$trait for Var<'t, T> {
            type Output = Var<'t, T>;
            fn $fn(self, rhs: Var<'t, T>) -> Var<'t, T> {
                self.$method(rhs)
            }
        }
    };
}
impl_std_op!(Add, add, add_var);
impl_std_op!(Sub, sub, sub_var);
impl_std_op!(Mul, mul, mul_var);
impl_std_op!(Div, div, div_var);

impl<'t, T: Real> Var<'t, T> {
    fn binary_values(self, other: Var<'t, T>, op: &str) -> (Vec<usize>, Vec<usize>, Vec<usize>, bool) {
        self.same_tape(&other, op);
        let (ashape, bshape) = self
            .tape
            .with_nodes(|n| (n[self.id].shape.clone(), n[other.id].shape.clone()));
        let out = broadcast_shape(op, &ashape, &bshape);
        let rg = self.requires_grad() || other.requires_grad();
        (ashape, bshape, out, rg)
    }

    pub fn add_var(self, other: Var<'t, T>) -> Var<'t, T> {
        let (ashape, bshape, out_shape, rg) = self.binary_values(other, "add");
        let mut out = vec![T::ZERO; numel(&out_shape)];
        self.tape.with_nodes(|n| {
            zip_broadcast(
                &n[self.id].value,
                &ashape,
                &n[other.id].value,
                &bshape,
                &out_shape,
                |i, a, b| out[i] = a + b,
            )
        });
        let (ai, bi) = (self.id, other.id);
        let from = out_shape.clone();
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let mut contribs = Vec::with_capacity(2);
            if view.needs_grad(ai) {
                contribs.push((ai, reduce_to_shape(g, &from, view.shape(ai))));
            }
            if view.needs_grad(bi) {
                contribs.push((bi, reduce_to_shape(g, &from, view.shape(bi))));
            }
            contribs
        });
        self.tape
            .push_node(out_shape, out, rg, rg.then_some(back))
    }

    pub fn sub_var(self, other: Var<'t, T>) -> Var<'t, T> {
        let (ashape, bshape, out_shape, rg) = self.binary_values(other, "sub");
        let mut out = vec![T::ZERO; numel(&out_shape)];
        self.tape.with_nodes(|n| {
            zip_broadcast(
                &n[self.id].value,
                &ashape,
                &n[other.id].value,
                &bshape,
                &out_shape,
                |i, a, b| out[i] = a - b,
            )
        });
        let (ai, bi) = (self.id, other.id);
        let from = out_shape.clone();
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let mut contribs = Vec::with_capacity(2);
            if view.needs_grad(ai) {
                contribs.push((ai, reduce_to_shape(g, &from, view.shape(ai))));
            }
            if view.needs_grad(bi) {
                let neg: Vec<T> = g.iter().map(|&v| -v).collect();
                contribs.push((bi, reduce_to_shape(&neg, &from, view.shape(bi))));
            }
            contribs
        });
        self.tape
            .push_node(out_shape, out, rg, rg.then_some(back))
    }

    pub fn mul_var(self, other: Var<'t, T>) -> Var<'t, T> {
        let (ashape, bshape, out_shape, rg) = self.binary_values(other, "mul");
        let mut out = vec![T::ZERO; numel(&out_shape)];
        self.tape.with_nodes(|n| {
            zip_broadcast(
                &n[self.id].value,
                &ashape,
                &n[other.id].value,
                &bshape,
                &out_shape,
                |i, a, b| out[i] = a * b,
            )
        });
        let (ai, bi) = (self.id, other.id);
        let from = out_shape.clone();
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let (va, vb) = (view.value(ai), view.value(bi));
            let (sa, sb) = (view.shape(ai), view.shape(bi));
            let mut contribs = Vec::with_capacity(2);
            if view.needs_grad(ai) {
                let mut da = vec![T::ZERO; g.len()];
                zip_broadcast(va, sa, vb, sb, &from, |i, _a, b| da[i] = g[i] * b);
                contribs.push((ai, reduce_to_shape(&da, &from, sa)));
            }
            if view.needs_grad(bi) {
                let mut db = vec![T::ZERO; g.len()];
                zip_broadcast(va, sa, vb, sb, &from, |i, a, _b| db[i] = g[i] * a);
                contribs.push((bi, reduce_to_shape(&db, &from, sb)));
            }
            contribs
        });
        self.tape
            .push_node(out_shape, out, rg, rg.then_some(back))
    }

    pub fn div_var(self, other: Var<'t, T>) -> Var<'t, T> {
        let (ashape, bshape, out_shape, rg) = self.binary_values(other, "div");
        let mut out = vec![T::ZERO; numel(&out_shape)];
        self.tape.with_nodes(|n| {
            zip_broadcast(
                &n[self.id].value,
                &ashape,
                &n[other.id].value,
                &bshape,
                &out_shape,
                |i, a, b| out[i] = a / b,
            )
        });
        let (ai, bi) = (self.id, other.id);
        let from = out_shape.clone();
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let (va, vb) = (view.value(ai), view.value(bi));
            let (sa, sb) = (view.shape(ai), view.shape(bi));
            let mut contribs = Vec::with_capacity(2);
            if view.needs_grad(ai) {
                let mut da = vec![T::ZERO; g.len()];
                zip_broadcast(va, sa, vb, sb, &from, |i, _a, b| da[i] = g[i] / b);
                contribs.push((ai, reduce_to_shape(&da, &from, sa)));
            }
            if view.needs_grad(bi) {
                let mut db = vec![T::ZERO; g.len()];
                zip_broadcast(va, sa, vb, sb, &from, |i, a, b| db[i] = -g[i] * a / (b * b));
                contribs.push((bi, reduce_to_shape(&db, &from, sb)));
            }
            contribs
        });
        self.tape
            .push_node(out_shape, out, rg, rg.then_some(back))
    }

    // -----------------------------------------------------------------------
    // Elementwise unary ops
    // -----------------------------------------------------------------------

    fn unary(
        self,
        fwd: impl Fn(T) -> T,
        dfn: impl Fn(T, T) -> T + 'static, // (input, output) -> local derivative
    ) -> Var<'t, T> {
        let (shape, value, rg) = self.tape.with_nodes(|n| {
            (
                n[self.id].shape.clone(),
                n[self.id].value.iter().map(|&x| fwd(x)).collect::<Vec<T>>(),
                n[self.id].requires_grad,
            )
        });
        let ai = self.id;
        let back: BackFn<T> = Box::new(move |id, g, view| {
            let x = view.value(ai);
            let y = view.value(id);
            let dg = g
                .iter()
                .zip(x.iter().zip(y.iter()))
                .map(|(&gi, (&xi, &yi))| gi * dfn(xi, yi))
                .collect();
            vec![(ai, dg)]
        });
        self.tape.push_node(shape, value, rg, rg.then_some(back))
    }

    pub fn neg(self) -> Var<'t, T> {
        self.unary(|x| -x, |_, _| -T::ONE)
    }

    /// x * s for a plain scalar s.
    pub fn scale(self, s: f64) -> Var<'t, T> {
        let sv = T::from_f64(s);
        self.unary(move |x| x * sv, move |_, _| sv)
    }

    /// x + s for a plain scalar s.
    pub fn offset(self, s: f64) -> Var<'t, T> {
        let sv = T::from_f64(s);
        self.unary(move |x| x + sv, |_, _| T::ONE)
    }

    pub fn sqr(self) -> Var<'t, T> {
        self.mul_var(self)
    }

    pub fn exp(self) -> Var<'t, T> {
        self.unary(|x| x.exp(), |_, y| y)
    }

    /// Natural log; rejects non-positive inputs.
    pub fn ln(self) -> Var<'t, T> {
        self.tape.with_nodes(|n| {
            if let Some(v) = n[self.id].value.iter().find(|v| **v <= T::ZERO) {
                panic!("ln: domain error, non-positive input {v} (use ln_guarded)");
            }
        });
        self.unary(|x| x.ln(), |x, _| T::ONE / x)
    }

    /// ln(max(x, floor)); the clamped region gets zero gradient.
    pub fn ln_guarded(self, floor: f64) -> Var<'t, T> {
        let fl = T::from_f64(floor);
        self.unary(
            move |x| x.maxf(fl).ln(),
            move |x, _| {
                if x > fl {
                    T::ONE / x
                } else {
                    T::ZERO
                }
            },
        )
    }

    /// Square root; rejects non-positive inputs.
    pub fn sqrt(self) -> Var<'t, T> {
        self.tape.with_nodes(|n| {
            if let Some(v) = n[self.id].value.iter().find(|v| **v <= T::ZERO) {
                panic!("sqrt: domain error, non-positive input {v} (use sqrt_guarded)");
            }
        });
        self.unary(
            |x| x.sqrt(),
            |_, y| T::ONE / (T::from_f64(2.0) * y),
        )
    }

    /// sqrt(x + eps), smooth at zero.
    pub fn sqrt_guarded(self, eps: f64) -> Var<'t, T> {
        let e = T::from_f64(eps);
        self.unary(
            move |x| (x + e).sqrt(),
            |_, y| T::ONE / (T::from_f64(2.0) * y),
        )
    }

    /// GELU (tanh form), evaluated as x * sigmoid(2u) with u = c(x + kx^3)
    /// so the hot path is a single vectorizable exp. Backward recovers the
    /// sigmoid from the stored output instead of re-running exp.
    pub fn gelu(self) -> Var<'t, T> {
        let c2 = T::from_f64(2.0 * (2.0 / std::f64::consts::PI).sqrt());
        let k = T::from_f64(0.044715);
        let three = T::from_f64(3.0);
        let half = T::from_f64(0.5);
        self.unary(
            move |x| {
                let z = c2 * (x + k * x * x * x);
                x / (T::ONE + (-z).exp_act())
            },
            move |x, y| {
                let s = if x == T::ZERO { half } else { y / x };
                let dz = c2 * (T::ONE + three * k * x * x);
                s + x * s * (T::ONE - s) * dz
            },
        )
    }

    // -----------------------------------------------------------------------
    // Matrix multiply (batched)
    // -----------------------------------------------------------------------

    /// Batched matmul: (..., m, k) @ (..., k, n) -> (..., m, n). Leading
    /// dimensions must match exactly.
    pub fn matmul(self, other: Var<'t, T>) -> Var<'t, T> {
        self.same_tape(&other, "matmul");
        let (ashape, bshape) = self
            .tape
            .with_nodes(|n| (n[self.id].shape.clone(), n[other.id].shape.clone()));
        assert!(
            ashape.len() >= 2 && bshape.len() >= 2,
            "matmul: operands must be at least rank 2, got {:?} and {:?}",
            ashape,
            bshape
        );
        assert_eq!(
            ashape[..ashape.len() - 2],
            bshape[..bshape.len() - 2],
            "matmul: leading dims differ: {:?} vs {:?}",
            ashape,
            bshape
        );
        let (m, k) = (ashape[ashape.len() - 2], ashape[ashape.len() - 1]);
        let (kb, n) = (bshape[bshape.len() - 2], bshape[bshape.len() - 1]);
        assert_eq!(
            k, kb,
            "matmul: inner dims differ: {:?} @ {:?}",
            ashape, bshape
        );
        let batch: usize = ashape[..ashape.len() - 2].iter().product();
        let mut out_shape = ashape[..ashape.len() - 2].to_vec();
        out_shape.extend_from_slice(&[m, n]);

        let mut out = vec![T::ZERO; batch * m * n];
        self.tape.with_nodes(|nodes| {
            let a = &nodes[self.id].value;
            let b = &nodes[other.id].value;
            for bi in 0..batch {
                kernels::mm_nn(
                    &mut out[bi * m * n..(bi + 1) * m * n],
                    &a[bi * m * k..(bi + 1) * m * k],
                    &b[bi * k * n..(bi + 1) * k * n],
                    m,
                    k,
                    n,
                );
            }
        });
        let rg = self.requires_grad() || other.requires_grad();
        let (ai, bi_id) = (self.id, other.id);
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let a = view.value(ai);
            let b = view.value(bi_id);
            let mut contribs = Vec::with_capacity(2);
            if view.needs_grad(ai) {
                // dA = G @ B^T
                let mut da = vec![T::ZERO; a.len()];
                for bt in 0..batch {
                    kernels::mm_nt(
                        &mut da[bt * m * k..(bt + 1) * m * k],
                        &g[bt * m * n..(bt + 1) * m * n],
                        &b[bt * k * n..(bt + 1) * k * n],
                        m,
                        n,
                        k,
                    );
                }
                contribs.push((ai, da));
            }
            if view.needs_grad(bi_id) {
                // dB = A^T @ G
                let mut db = vec![T::ZERO; b.len()];
                for bt in 0..batch {
                    kernels::mm_tn(
                        &mut db[bt * k * n..(bt + 1) * k * n],
                        &a[bt * m * k..(bt + 1) * m * k],
                        &g[bt * m * n..(bt + 1) * m * n],
                        m,
                        k,
                        n,
                    );
                }
                contribs.push((bi_id, db));
            }
            contribs
        });
        self.tape
            .push_node(out_shape, out, rg, rg.then_some(back))
    }

    // -----------------------------------------------------------------------
    // Convolutions
    // -----------------------------------------------------------------------

    /// 1-D convolution: self (batch, c_in, width), kernel (c_out, c_in, k).
    pub fn conv1d(self, kernel: Var<'t, T>, stride: usize, pad: usize) -> Var<'t, T> {
        self.same_tape(&kernel, "conv1d");
        assert!(stride >= 1, "conv1d: stride must be >= 1");
        let (xshape, wshape) = self
            .tape
            .with_nodes(|n| (n[self.id].shape.clone(), n[kernel.id].shape.clone()));
        assert_eq!(xshape.len(), 3, "conv1d: input must be (batch, c_in, width), got {:?}", xshape);
        assert_eq!(wshape.len(), 3, "conv1d: kernel must be (c_out, c_in, k), got {:?}", wshape);
        let (batch, c_in, width) = (xshape[0], xshape[1], xshape[2]);
        let (c_out, wc_in, k) = (wshape[0], wshape[1], wshape[2]);
        assert_eq!(
            c_in, wc_in,
            "conv1d: input channels {} != kernel channels {} (input {:?}, kernel {:?})",
            c_in, wc_in, xshape, wshape
        );
        let w_out = kernels::conv_out_width(width, k, stride, pad);
        let out = self.tape.with_nodes(|n| {
            kernels::conv1d(
                &n[self.id].value,
                batch,
                c_in,
                width,
                &n[kernel.id].value,
                c_out,
                k,
                stride,
                pad,
            )
        });
        let rg = self.requires_grad() || kernel.requires_grad();
        let (xi, wi) = (self.id, kernel.id);
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let mut contribs = Vec::with_capacity(2);
            if view.needs_grad(xi) {
                contribs.push((
                    xi,
                    kernels::conv1d_grad_input(
                        g, batch, c_in, width, view.value(wi), c_out, k, stride, pad,
                    ),
                ));
            }
            if view.needs_grad(wi) {
                contribs.push((
                    wi,
                    kernels::conv1d_grad_kernel(
                        g, view.value(xi), batch, c_in, width, c_out, k, stride, pad,
                    ),
                ));
            }
            contribs
        });
        self.tape.push_node(
            vec![batch, c_out, w_out],
            out,
            rg,
            rg.then_some(back),
        )
    }

    /// Transposed 1-D convolution: self (batch, c_in, width), kernel
    /// (c_in, c_out, k).
    pub fn conv1d_transpose(self, kernel: Var<'t, T>, stride: usize, pad: usize) -> Var<'t, T> {
        self.same_tape(&kernel, "conv1d_transpose");
        assert!(stride >= 1, "conv1d_transpose: stride must be >= 1");
        let (xshape, wshape) = self
            .tape
            .with_nodes(|n| (n[self.id].shape.clone(), n[kernel.id].shape.clone()));
        assert_eq!(xshape.len(), 3, "conv1d_transpose: input must be rank 3, got {:?}", xshape);
        assert_eq!(wshape.len(), 3, "conv1d_transpose: kernel must be (c_in, c_out, k), got {:?}", wshape);
        let (batch, c_in, width) = (xshape[0], xshape[1], xshape[2]);
        let (wc_in, c_out, k) = (wshape[0], wshape[1], wshape[2]);
        assert_eq!(
            c_in, wc_in,
            "conv1d_transpose: input channels {} != kernel channels {} (input {:?}, kernel {:?})",
            c_in, wc_in, xshape, wshape
        );
        let w_out = kernels::conv_transpose_out_width(width, k, stride, pad);
        let out = self.tape.with_nodes(|n| {
            kernels::conv1d_transpose(
                &n[self.id].value,
                batch,
                c_in,
                width,
                &n[kernel.id].value,
                c_out,
                k,
                stride,
                pad,
            )
        });
        let rg = self.requires_grad() || kernel.requires_grad();
        let (xi, wi) = (self.id, kernel.id);
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let mut contribs = Vec::with_capacity(2);
            if view.needs_grad(xi) {
                contribs.push((
                    xi,
                    kernels::conv1d_transpose_grad_input(
                        g, batch, c_in, width, view.value(wi), c_out, k, stride, pad,
                    ),
                ));
            }
            if view.needs_grad(wi) {
                contribs.push((
                    wi,
                    kernels::conv1d_transpose_grad_kernel(
                        g, view.value(xi), batch, c_in, width, c_out, k, stride, pad,
                    ),
                ));
            }
            contribs
        });
        self.tape.push_node(
            vec![batch, c_out, w_out],
            out,
            rg,
            rg.then_some(back),
        )
    }

    // -----------------------------------------------------------------------
    // Softmax / layer norm
    // -----------------------------------------------------------------------

    pub fn softmax(self, axis: usize) -> Var<'t, T> {
        let shape = self.shape();
        let (outer, len, inner) = axis_split(&shape, axis);
        let mut out = vec![T::ZERO; numel(&shape)];
        self.tape.with_nodes(|n| {
            let x = &n[self.id].value;
            for o in 0..outer {
                for i in 0..inner {
                    let at = |a: usize| (o * len + a) * inner + i;
                    let mut mx = x[at(0)];
                    for a in 1..len {
                        mx = mx.maxf(x[at(a)]);
                    }
                    let mut denom = T::ZERO;
                    for a in 0..len {
                        let e = (x[at(a)] - mx).exp();
                        out[at(a)] = e;
                        denom += e;
                    }
                    for a in 0..len {
                        out[at(a)] = out[at(a)] / denom;
                    }
                }
            }
        });
        let rg = self.requires_grad();
        let ai = self.id;
        let back: BackFn<T> = Box::new(move |id, g, view| {
            let y = view.value(id);
            let mut dx = vec![T::ZERO; g.len()];
            for o in 0..outer {
                for i in 0..inner {
                    let at = |a: usize| (o * len + a) * inner + i;
                    let mut dot = T::ZERO;
                    for a in 0..len {
                        dot += g[at(a)] * y[at(a)];
                    }
                    for a in 0..len {
                        dx[at(a)] = y[at(a)] * (g[at(a)] - dot);
                    }
                }
            }
            vec![(ai, dx)]
        });
        self.tape.push_node(shape, out, rg, rg.then_some(back))
    }

    /// Layer normalization over the last axis with learned gamma/beta of
    /// shape (last_dim,).
    pub fn layer_norm(self, gamma: Var<'t, T>, beta: Var<'t, T>, eps: f64) -> Var<'t, T> {
        self.same_tape(&gamma, "layer_norm");
        self.same_tape(&beta, "layer_norm");
        let shape = self.shape();
        let d = *shape.last().expect("layer_norm: rank must be >= 1");
        assert_eq!(
            gamma.shape(),
            vec![d],
            "layer_norm: gamma shape {:?} != ({},)",
            gamma.shape(),
            d
        );
        assert_eq!(
            beta.shape(),
            vec![d],
            "layer_norm: beta shape {:?} != ({},)",
            beta.shape(),
            d
        );
        let rows = numel(&shape) / d;
        let epsv = T::from_f64(eps);
        let dv = T::from_f64(d as f64);
        let mut out = vec![T::ZERO; numel(&shape)];
        self.tape.with_nodes(|n| {
            let x = &n[self.id].value;
            let gm = &n[gamma.id].value;
            let bt = &n[beta.id].value;
            for r in 0..rows {
                let row = &x[r * d..(r + 1) * d];
                let mean = kernels::sum(row) / dv;
                let mut var = T::ZERO;
                for &v in row {
                    let c = v - mean;
                    var += c * c;
                }
                var = var / dv;
                let inv_std = T::ONE / (var + epsv).sqrt();
                for j in 0..d {
                    out[r * d + j] = (row[j] - mean) * inv_std * gm[j] + bt[j];
                }
            }
        });
        let rg = self.requires_grad() || gamma.requires_grad() || beta.requires_grad();
        let (xi, gi, bi) = (self.id, gamma.id, beta.id);
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let x = view.value(xi);
            let gm = view.value(gi);
            let mut dx = vec![T::ZERO; x.len()];
            let mut dgamma = vec![T::ZERO; d];
            let mut dbeta = vec![T::ZERO; d];
            for r in 0..rows {
                let row = &x[r * d..(r + 1) * d];
                let grow = &g[r * d..(r + 1) * d];
                let mean = kernels::sum(row) / dv;
                let mut var = T::ZERO;
                for &v in row {
                    let c = v - mean;
                    var += c * c;
                }
                var = var / dv;
                let inv_std = T::ONE / (var + epsv).sqrt();
                let mut dxhat_sum = T::ZERO;
                let mut dxhat_xhat_sum = T::ZERO;
                for j in 0..d {
                    let xhat = (row[j] - mean) * inv_std;
                    let dxhat = grow[j] * gm[j];
                    dgamma[j] += grow[j] * xhat;
                    dbeta[j] += grow[j];
                    dxhat_sum += dxhat;
                    dxhat_xhat_sum += dxhat * xhat;
                }
                for j in 0..d {
                    let xhat = (row[j] - mean) * inv_std;
                    let dxhat = grow[j] * gm[j];
                    dx[r * d + j] =
                        inv_std / dv * (dv * dxhat - dxhat_sum - xhat * dxhat_xhat_sum);
                }
            }
            vec![(xi, dx), (gi, dgamma), (bi, dbeta)]
        });
        self.tape.push_node(shape, out, rg, rg.then_some(back))
    }

    /// Layer normalization across the channel axis of a (batch, C, W)
    /// tensor, with per-channel gamma/beta. Equivalent to permuting W and C,
    /// normalizing the last axis and permuting back, but works on channel
    /// planes so the inner loops stay contiguous over W.
    pub fn layer_norm_channels(self, gamma: Var<'t, T>, beta: Var<'t, T>, eps: f64) -> Var<'t, T> {
        self.same_tape(&gamma, "layer_norm_channels");
        self.same_tape(&beta, "layer_norm_channels");
        let shape = self.shape();
        assert_eq!(
            shape.len(),
            3,
            "layer_norm_channels: expected (batch, C, W), got {:?}",
            shape
        );
        let (batch, c, w) = (shape[0], shape[1], shape[2]);
        assert_eq!(gamma.shape(), vec![c], "layer_norm_channels: gamma must be ({c},)");
        assert_eq!(beta.shape(), vec![c], "layer_norm_channels: beta must be ({c},)");
        let cv = T::from_f64(c as f64);
        let epsv = T::from_f64(eps);
        let mut out = vec![T::ZERO; batch * c * w];
        self.tape.with_nodes(|nodes| {
            let x = &nodes[self.id].value;
            let gm = &nodes[gamma.id].value;
            let bt = &nodes[beta.id].value;
            let mut mean = vec![T::ZERO; w];
            let mut inv_std = vec![T::ZERO; w];
            for n in 0..batch {
                let xb = &x[n * c * w..(n + 1) * c * w];
                for m in mean.iter_mut() {
                    *m = T::ZERO;
                }
                for ci in 0..c {
                    for (m, v) in mean.iter_mut().zip(&xb[ci * w..(ci + 1) * w]) {
                        *m += *v;
                    }
                }
                for m in mean.iter_mut() {
                    *m = *m / cv;
                }
                for s in inv_std.iter_mut() {
                    *s = T::ZERO;
                }
                for ci in 0..c {
                    for ((s, v), m) in inv_std
                        .iter_mut()
                        .zip(&xb[ci * w..(ci + 1) * w])
                        .zip(mean.iter())
                    {
                        let d = *v - *m;
                        *s += d * d;
                    }
                }
                for s in inv_std.iter_mut() {
                    *s = T::ONE / (*s / cv + epsv).sqrt();
                }
                let ob = &mut out[n * c * w..(n + 1) * c * w];
                for ci in 0..c {
                    let (gc, bc) = (gm[ci], bt[ci]);
                    for (((o, v), m), s) in ob[ci * w..(ci + 1) * w]
                        .iter_mut()
                        .zip(&xb[ci * w..(ci + 1) * w])
                        .zip(mean.iter())
                        .zip(inv_std.iter())
                    {
                        *o = (*v - *m) * *s * gc + bc;
                    }
                }
            }
        });
        let rg = self.requires_grad() || gamma.requires_grad() || beta.requires_grad();
        let (xi, gi, bi) = (self.id, gamma.id, beta.id);
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            let x = view.value(xi);
            let gm = view.value(gi);
            let mut dx = vec![T::ZERO; x.len()];
            let mut dgamma = vec![T::ZERO; c];
            let mut dbeta = vec![T::ZERO; c];
            let mut mean = vec![T::ZERO; w];
            let mut inv_std = vec![T::ZERO; w];
            let mut sum_dxhat = vec![T::ZERO; w];
            let mut sum_dxhat_xhat = vec![T::ZERO; w];
            for n in 0..batch {
                let xb = &x[n * c * w..(n + 1) * c * w];
                let gb = &g[n * c * w..(n + 1) * c * w];
                for m in mean.iter_mut() {
                    *m = T::ZERO;
                }
                for ci in 0..c {
                    for (m, v) in mean.iter_mut().zip(&xb[ci * w..(ci + 1) * w]) {
                        *m += *v;
                    }
                }
                for m in mean.iter_mut() {
                    *m = *m / cv;
                }
                for s in inv_std.iter_mut() {
                    *s = T::ZERO;
                }
                for ci in 0..c {
                    for ((s, v), m) in inv_std
                        .iter_mut()
                        .zip(&xb[ci * w..(ci + 1) * w])
                        .zip(mean.iter())
                    {
                        let d = *v - *m;
                        *s += d * d;
                    }
                }
                for s in inv_std.iter_mut() {
                    *s = T::ONE / (*s / cv + epsv).sqrt();
                }
                for v in sum_dxhat.iter_mut() {
                    *v = T::ZERO;
                }
                for v in sum_dxhat_xhat.iter_mut() {
                    *v = T::ZERO;
                }
                for ci in 0..c {
                    let gc = gm[ci];
                    let (mut dg_c, mut db_c) = (T::ZERO, T::ZERO);
                    for (j, ((gv, v), (m, s))) in gb[ci * w..(ci + 1) * w]
                        .iter()
                        .zip(&xb[ci * w..(ci + 1) * w])
                        .zip(mean.iter().zip(inv_std.iter()))
                        .enumerate()
                    {
                        let xhat = (*v - *m) * *s;
                        let dxhat = *gv * gc;
                        dg_c += *gv * xhat;
                        db_c += *gv;
                        sum_dxhat[j] += dxhat;
                        sum_dxhat_xhat[j] += dxhat * xhat;
                    }
                    dgamma[ci] += dg_c;
                    dbeta[ci] += db_c;
                }
                let dxb = &mut dx[n * c * w..(n + 1) * c * w];
                for ci in 0..c {
                    let gc = gm[ci];
                    for (j, ((dxv, gv), v)) in dxb[ci * w..(ci + 1) * w]
                        .iter_mut()
                        .zip(&gb[ci * w..(ci + 1) * w])
                        .zip(&xb[ci * w..(ci + 1) * w])
                        .enumerate()
                    {
                        let xhat = (*v - mean[j]) * inv_std[j];
                        let dxhat = *gv * gc;
                        *dxv = inv_std[j] / cv
                            * (cv * dxhat - sum_dxhat[j] - xhat * sum_dxhat_xhat[j]);
                    }
                }
            }
            vec![(xi, dx), (gi, dgamma), (bi, dbeta)]
        });
        self.tape
            .push_node(vec![batch, c, w], out, rg, rg.then_some(back))
    }

    // -----------------------------------------------------------------------
    // Reductions
    // -----------------------------------------------------------------------

    pub fn sum_all(self) -> Var<'t, T> {
        let total = self.tape.with_nodes(|n| kernels::sum(&n[self.id].value));
        let rg = self.requires_grad();
        let ai = self.id;
        let back: BackFn<T> = Box::new(move |_id, g, view| {
            vec![(ai, vec![g[0]; view.value(ai).len()])]
        });
        self.tape
            .push_node(vec![1], vec![total], rg, rg.then_some(back))
    }

    pub fn mean_all(self) -> Var<'t, T> {
        let n = self.numel();
        self.sum_all().scale(1.0 / n as f64)
    }

    /// Sum over one axis, keeping it as size 1.
    pub fn sum_axis(self, axis: usize) -> Var<'t, T> {
        let shape = self.shape();
        let (outer, len, inner) = axis_split(&shape, axis);
        let mut out_shape = shape.clone();
        out_shape[axis] = 1;
        let mut out = vec![T::ZERO; outer * inner];
        self.tape.with_nodes(|n| {
            let x = &n[self.id].value;
            for o in 0..outer {
                for a in 0..len {
                    let src = &x[(o * len + a) * inner..(o * len + a + 1) * inner];
                    let dst = &mut out[o * inner..(o + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        *d += *s;
                    }
                }
            }
        });
        let rg = self.requires_grad();
        let ai = self.id;
        let back: BackFn<T> = Box::new(move |_id, g, _view| {
            let mut dx = vec![T::ZERO; outer * len * inner];
            for o in 0..outer {
                for a in 0..len {
                    let dst = &mut dx[(o * len + a) * inner..(o * len + a + 1) * inner];
                    dst.copy_from_slice(&g[o * inner..(o + 1) * inner]);
                }
            }
            vec![(ai, dx)]
        });
        self.tape
            .push_node(out_shape, out, rg, rg.then_some(back))
    }

    /// Mean over one axis, keeping it as size 1.
    pub fn mean_axis(self, axis: usize) -> Var<'t, T> {
        let len = self.shape()[axis];
        self.sum_axis(axis).scale(1.0 / len as f64)
    }

    /// Population variance over one axis (kept as size 1). Composition of
    /// recorded primitives, so gradients flow.
    pub fn var_axis(self, axis: usize) -> Var<'t, T> {
        let centered = self.sub_var(self.mean_axis(axis));
        centered.sqr().mean_axis(axis)
    }

    // -----------------------------------------------------------------------
    // Shape ops
    // -----------------------------------------------------------------------

    pub fn reshape(self, new_shape: &[usize]) -> Var<'t, T> {
        let (shape, value, rg) = self.tape.with_nodes(|n| {
            (
                n[self.id].shape.clone(),
                n[self.id].value.clone(),
                n[self.id].requires_grad,
            )
        });
        assert_eq!(
            numel(&shape),
            numel(new_shape),
            "reshape: cannot reshape {:?} into {:?}",
            shape,
            new_shape
        );
        let ai = self.id;
        let back: BackFn<T> = Box::new(move |_id, g, _view| vec![(ai, g.to_vec())]);
        self.tape
            .push_node(new_shape.to_vec(), value, rg, rg.then_some(back))
    }

    /// Permute axes; `perm` must be a permutation of 0..rank.
    pub fn permute(self, perm: &[usize]) -> Var<'t, T> {
        let shape = self.shape();
        assert_eq!(perm.len(), shape.len(), "permute: {:?} vs rank {}", perm, shape.len());
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            assert!(p < perm.len() && !seen[p], "permute: invalid permutation {:?}", perm);
            seen[p] = true;
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let value = self
            .tape
            .with_nodes(|n| permute_data(&n[self.id].value, &shape, perm));
        let rg = self.requires_grad();
        let ai = self.id;
        let mut inverse = vec![0usize; perm.len()];
        for (d, &p) in perm.iter().enumerate() {
            inverse[p] = d;
        }
        let fwd_out_shape = out_shape.clone();
        let back: BackFn<T> = Box::new(move |_id, g, _view| {
            vec![(ai, permute_data(g, &fwd_out_shape, &inverse))]
        });
        self.tape
            .push_node(out_shape, value, rg, rg.then_some(back))
    }

    /// Swap two axes.
    pub fn transpose(self, a: usize, b: usize) -> Var<'t, T> {
        let rank = self.shape().len();
        let mut perm: Vec<usize> = (0..rank).collect();
        perm.swap(a, b);
        self.permute(&perm)
    }

    /// Slice `[start, end)` along `axis`.
    pub fn slice(self, axis: usize, start: usize, end: usize) -> Var<'t, T> {
        let shape = self.shape();
        let (outer, len, inner) = axis_split(&shape, axis);
        assert!(
            start < end && end <= len,
            "slice: range {}..{} out of extent {} (shape {:?})",
            start,
            end,
            len,
            shape
        );
        let span = end - start;
        let mut out_shape = shape.clone();
        out_shape[axis] = span;
        let mut out = vec![T::ZERO; outer * span * inner];
        self.tape.with_nodes(|n| {
            let x = &n[self.id].value;
            for o in 0..outer {
                for a in 0..span {
                    let src = (o * len + start + a) * inner;
                    let dst = (o * span + a) * inner;
                    out[dst..dst + inner].copy_from_slice(&x[src..src + inner]);
                }
            }
        });
        let rg = self.requires_grad();
        let ai = self.id;
        let back: BackFn<T> = Box::new(move |_id, g, _view| {
            let mut dx = vec![T::ZERO; outer * len * inner];
            for o in 0..outer {
                for a in 0..span {
                    let dst = (o * len + start + a) * inner;
                    let src = (o * span + a) * inner;
                    dx[dst..dst + inner].copy_from_slice(&g[src..src + inner]);
                }
            }
            vec![(ai, dx)]
        });
        self.tape
            .push_node(out_shape, out, rg, rg.then_some(back))
    }

    // -----------------------------------------------------------------------
    // Dropout
    // -----------------------------------------------------------------------

    /// Train-mode dropout: zero with probability `rate`, scale survivors by
    /// 1/(1-rate). Mask is drawn from `rng` and recorded as a constant, so
    /// the same seed reproduces the same mask. Eval mode simply skips the
    /// call.
    pub fn dropout(self, rate: f64, rng: &mut ChaCha8Rng) -> Var<'t, T> {
        assert!((0.0..1.0).contains(&rate), "dropout: rate {rate} not in [0, 1)");
        if rate == 0.0 {
            return self;
        }
        let keep = 1.0 / (1.0 - rate);
        let shape = self.shape();
        let mask: Vec<T> = (0..numel(&shape))
            .map(|_| {
                if rng.gen::<f64>() < rate {
                    T::ZERO
                } else {
                    T::from_f64(keep)
                }
            })
            .collect();
        let mask = self.tape.constant(&Tensor::new(shape, mask));
        self.mul_var(mask)
    }
}

fn permute_data<T: Real>(data: &[T], shape: &[usize], perm: &[usize]) -> Vec<T> {
    let ndim = shape.len();
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let mut in_strides = vec![1usize; ndim];
    for d in (0..ndim.saturating_sub(1)).rev() {
        in_strides[d] = in_strides[d + 1] * shape[d + 1];
    }
    let out_strides_in: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = vec![T::ZERO; data.len()];
    let mut counters = vec![0usize; ndim];
    let mut src = 0usize;
    for slot in out.iter_mut() {
        *slot = data[src];
        for d in (0..ndim).rev() {
            counters[d] += 1;
            src += out_strides_in[d];
            if counters[d] == out_shape[d] {
                counters[d] = 0;
                src -= out_strides_in[d] * out_shape[d];
            } else {
                break;
            }
        }
    }
    out
}

/// Concatenate along `axis`.
pub fn concat<'t, T: Real>(axis: usize, parts: &[Var<'t, T>]) -> Var<'t, T> {
    assert!(!parts.is_empty(), "concat: no inputs");
    let first = parts[0];
    for p in &parts[1..] {
        first.same_tape(p, "concat");
    }
    let shapes: Vec<Vec<usize>> = parts.iter().map(|p| p.shape()).collect();
    for s in &shapes[1..] {
        assert_eq!(s.len(), shapes[0].len(), "concat: rank mismatch {:?} vs {:?}", s, shapes[0]);
        for d in 0..s.len() {
            if d != axis {
                assert_eq!(
                    s[d], shapes[0][d],
                    "concat: non-axis extents differ: {:?} vs {:?}",
                    s, shapes[0]
                );
            }
        }
    }
    let (outer, _, inner) = axis_split(&shapes[0], axis);
    let lens: Vec<usize> = shapes.iter().map(|s| s[axis]).collect();
    let total: usize = lens.iter().sum();
    let mut out_shape = shapes[0].clone();
    out_shape[axis] = total;
    let mut out = vec![T::ZERO; outer * total * inner];
    first.tape.with_nodes(|n| {
        for o in 0..outer {
            let mut off = 0;
            for (pi, part) in parts.iter().enumerate() {
                let x = &n[part.id].value;
                let span = lens[pi];
                let src = o * span * inner;
                let dst = (o * total + off) * inner;
                out[dst..dst + span * inner].copy_from_slice(&x[src..src + span * inner]);
                off += span;
            }
        }
    });
    let rg = parts.iter().any(|p| p.requires_grad());
    let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
    let lens_b = lens.clone();
    let back: BackFn<T> = Box::new(move |_id, g, _view| {
        let mut contribs = Vec::with_capacity(ids.len());
        let mut off = 0;
        for (pi, &pid) in ids.iter().enumerate() {
            let span = lens_b[pi];
            let mut dp = vec![T::ZERO; outer * span * inner];
            for o in 0..outer {
                let src = (o * total + off) * inner;
                let dst = o * span * inner;
                dp[dst..dst + span * inner].copy_from_slice(&g[src..src + span * inner]);
            }
            contribs.push((pid, dp));
            off += span;
        }
        contribs
    });
    first
        .tape
        .push_node(out_shape, out, rg, rg.then_some(back))
}
