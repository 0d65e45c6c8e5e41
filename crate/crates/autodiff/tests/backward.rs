//! Gradient correctness: analytic identities, finite differences, linearity,
//! accumulation, disconnection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{concat, grad_check, Tape, Tensor, Var, DEFAULT_STEP};

#[test]
fn grad_of_sum_of_squares() {
    let tape = Tape::<f64>::new();
    let x = tape.leaf(&Tensor::from_f64(&[2], &[1.0, 2.0]), true);
    let loss = x.sqr().sum_all();
    let grads = tape.backward(loss);
    assert_eq!(grads.get(x).data(), &[2.0, 4.0]);
}

#[test]
fn softmax_cross_entropy_grad_is_p_minus_y() {
    // loss = -sum(y * ln(softmax(z))) for one-hot y gives dz = p - y.
    let tape = Tape::<f64>::new();
    let z = tape.leaf(&Tensor::from_f64(&[5], &[0.3, -1.2, 2.0, 0.0, 0.5]), true);
    let y = tape.constant(&Tensor::from_f64(&[5], &[0.0, 0.0, 1.0, 0.0, 0.0]));
    let p = z.softmax(0);
    let loss = (y * p.ln_guarded(1e-12)).sum_all().neg();
    let grads = tape.backward(loss);
    let g = grads.get(z);
    let pv = p.value();
    let yv = y.value();
    for i in 0..5 {
        let expect = pv.data()[i] - yv.data()[i];
        assert!((g.data()[i] - expect).abs() < 1e-12);
    }
}

#[test]
fn gradient_accumulates_across_reuse() {
    // loss = sum(x * x) built with the same node twice plus x used in
    // another branch: d/dx [x^2 + 3x] = 2x + 3.
    let tape = Tape::<f64>::new();
    let x = tape.leaf(&Tensor::from_f64(&[3], &[1.0, -2.0, 0.5]), true);
    let loss = (x * x).sum_all() + x.scale(3.0).sum_all();
    let grads = tape.backward(loss);
    let g = grads.get(x);
    for (gi, xi) in g.data().iter().zip([1.0, -2.0, 0.5]) {
        assert!((gi - (2.0 * xi + 3.0)).abs() < 1e-12);
    }
}

#[test]
fn disconnected_node_gets_exact_zero() {
    let tape = Tape::<f64>::new();
    let x = tape.leaf(&Tensor::from_f64(&[2], &[1.0, 2.0]), true);
    let unused = tape.leaf(&Tensor::from_f64(&[4], &[1.0; 4]), true);
    let _dead_branch = unused.sqr().sum_all();
    let loss = x.sqr().sum_all();
    let grads = tape.backward(loss);
    assert!(grads.get_opt(unused).is_none());
    assert!(grads.get(unused).data().iter().all(|v| *v == 0.0));
}

#[test]
#[should_panic(expected = "loss must be scalar")]
fn non_scalar_backward_panics() {
    let tape = Tape::<f64>::new();
    let x = tape.leaf(&Tensor::zeros(&[2, 2]), true);
    let y = x.sqr();
    let _ = tape.backward(y);
}

#[test]
fn backward_linearity_holds_to_1e12() {
    // backward(a*f + b*g) == a*grad(f) + b*grad(g) elementwise.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let x0 = Tensor::<f64>::randn(&[3, 4], 1.0, &mut rng);
        let (a, b) = (1.75, -0.3125); // exactly representable scalars

        let grad_f = {
            let tape = Tape::<f64>::new();
            let x = tape.leaf(&x0, true);
            let f = x.sqr().sum_all();
            tape.backward(f).get(x)
        };
        let grad_g = {
            let tape = Tape::<f64>::new();
            let x = tape.leaf(&x0, true);
            let g = x.gelu().mean_all();
            tape.backward(g).get(x)
        };
        let grad_combo = {
            let tape = Tape::<f64>::new();
            let x = tape.leaf(&x0, true);
            let f = x.sqr().sum_all();
            let g = x.gelu().mean_all();
            let loss = f.scale(a) + g.scale(b);
            tape.backward(loss).get(x)
        };
        for i in 0..x0.numel() {
            let expect = a * grad_f.data()[i] + b * grad_g.data()[i];
            assert!(
                (grad_combo.data()[i] - expect).abs() < 1e-12,
                "linearity violated: {} vs {}",
                grad_combo.data()[i],
                expect
            );
        }
    }
}

#[test]
fn gradients_are_bit_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x0 = Tensor::<f32>::randn(&[4, 3, 12], 1.0, &mut rng);
        let w0 = Tensor::<f32>::randn(&[6, 3, 5], 0.3, &mut rng);
        let tape = Tape::<f32>::new();
        let x = tape.leaf(&x0, true);
        let w = tape.leaf(&w0, true);
        let loss = x.conv1d(w, 2, 2).gelu().sqr().mean_all();
        let grads = tape.backward(loss);
        (grads.get(x), grads.get(w), loss.value())
    };
    let (gx1, gw1, l1) = run();
    let (gx2, gw2, l2) = run();
    assert_eq!(l1, l2);
    assert_eq!(gx1, gx2);
    assert_eq!(gw1, gw2);
}

/// A composite touching every primitive, checked against central differences.
fn composite_loss<'t>(_tape: &'t Tape<f64>, vars: &[Var<'t, f64>]) -> Var<'t, f64> {
    let (x, w, wt, gamma, beta, q) = (vars[0], vars[1], vars[2], vars[3], vars[4], vars[5]);
    // conv -> gelu -> transposed conv -> slice/concat shuffle
    let c = x.conv1d(w, 2, 1).gelu();
    let u = c.conv1d_transpose(wt, 2, 1);
    let first = u.slice(2, 0, 3);
    let rest = u.slice(2, 3, u.shape()[2]);
    let u = concat(2, &[rest, first]);
    // layer norm over last axis after a permute, then attention-ish matmul
    let f = u.permute(&[0, 2, 1]).layer_norm(gamma, beta, 1e-6);
    let scores = f.matmul(f.transpose(1, 2)).scale(0.5).softmax(2);
    let mixed = scores.matmul(f);
    // statistics, guarded roots/logs, division, exp
    let mu = mixed.mean_axis(1);
    let centered = mixed - mu;
    let var = centered.sqr().mean_axis(1);
    let norm = centered / var.sqrt_guarded(1e-6);
    let qq = q.softmax(0).ln_guarded(1e-12);
    let energy = (norm.sqr().mean_all() + qq.mean_all().exp()).ln_guarded(1e-12);
    let spread = mixed.var_axis(2).mean_all().sqrt_guarded(1e-9);
    energy + spread.scale(0.25) + mixed.offset(0.1).sqr().mean_all().scale(0.125)
}

#[test]
fn composite_of_all_primitives_matches_finite_differences() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let inputs = vec![
            Tensor::<f64>::randn(&[2, 3, 8], 0.8, &mut rng),
            Tensor::<f64>::randn(&[4, 3, 3], 0.5, &mut rng),
            Tensor::<f64>::randn(&[4, 3, 4], 0.5, &mut rng),
            Tensor::<f64>::uniform(&[3], 0.5, 1.5, &mut rng),
            Tensor::<f64>::randn(&[3], 0.2, &mut rng),
            Tensor::<f64>::randn(&[6], 1.0, &mut rng),
        ];
        let err = grad_check(composite_loss, &inputs, DEFAULT_STEP);
        assert!(
            err < 1e-4,
            "composite gradient check failed at seed {seed}: rel err {err}"
        );
    }
}
