//! Isolate per-op costs at desk-scale shapes.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{Tape, Tensor};
use std::time::Instant;

fn timeit(label: &str, mut f: impl FnMut()) {
    let t0 = Instant::now();
    let iters = 20;
    for _ in 0..iters { f(); }
    println!("{label}: {:.2} ms", t0.elapsed().as_secs_f64() / iters as f64 * 1e3);
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x1 = Tensor::<f32>::randn(&[256, 2, 256], 1.0, &mut rng);
    let w1 = Tensor::<f32>::randn(&[4, 2, 7], 1.0, &mut rng);
    let x2 = Tensor::<f32>::randn(&[256, 4, 128], 1.0, &mut rng);
    let w2 = Tensor::<f32>::randn(&[8, 4, 5], 1.0, &mut rng);
    let x3 = Tensor::<f32>::randn(&[256, 8, 64], 1.0, &mut rng);
    let w3 = Tensor::<f32>::randn(&[16, 8, 3], 1.0, &mut rng);
    let big = Tensor::<f32>::randn(&[256, 4, 128], 1.0, &mut rng);
    let bias = Tensor::<f32>::randn(&[4, 1], 0.1, &mut rng);
    let g = Tensor::<f32>::randn(&[4], 0.1, &mut rng);
    let a2d = Tensor::<f32>::randn(&[2048, 64], 1.0, &mut rng);
    let b2d = Tensor::<f32>::randn(&[64, 512], 1.0, &mut rng);

    timeit("conv1 fwd (256,2->4,k7,s2,W256)", || {
        let t = Tape::new();
        let _ = t.constant(&x1).conv1d(t.constant(&w1), 2, 3);
    });
    timeit("conv2 fwd (256,4->8,k5,s2,W128)", || {
        let t = Tape::new();
        let _ = t.constant(&x2).conv1d(t.constant(&w2), 2, 2);
    });
    timeit("conv3 fwd (256,8->16,k3,s2,W64)", || {
        let t = Tape::new();
        let _ = t.constant(&x3).conv1d(t.constant(&w3), 2, 1);
    });
    timeit("gelu on 131k", || {
        let t = Tape::new();
        let _ = t.constant(&big).gelu();
    });
    timeit("bias add broadcast (256,4,128)+(4,1)", || {
        let t = Tape::new();
        let _ = t.constant(&big).add_var(t.constant(&bias));
    });
    timeit("permute (256,4,128)->(256,128,4)", || {
        let t = Tape::new();
        let _ = t.constant(&big).permute(&[0, 2, 1]);
    });
    timeit("LN rows=32768 d=4", || {
        let t = Tape::new();
        let p = t.constant(&big).permute(&[0, 2, 1]);
        let _ = p.layer_norm(t.constant(&g), t.constant(&g), 1e-5);
    });
    timeit("matmul 2048x64 @ 64x512", || {
        let t = Tape::new();
        let _ = t.constant(&a2d).matmul(t.constant(&b2d));
    });
    // raw allocation cost probe
    timeit("alloc+copy 131k x4", || {
        for _ in 0..4 {
            let v: Vec<f32> = big.data().to_vec();
            std::hint::black_box(&v);
        }
    });
}
