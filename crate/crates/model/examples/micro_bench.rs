//! Raw-loop probes vs op-level costs.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{Tape, Tensor};
use sleepalign_losses as losses;
use std::time::Instant;

fn timeit(label: &str, mut f: impl FnMut()) {
    let t0 = Instant::now();
    let iters = 50;
    for _ in 0..iters { f(); }
    println!("{label}: {:.3} ms", t0.elapsed().as_secs_f64() / iters as f64 * 1e3);
}

#[inline]
fn exp_f32(x: f32) -> f32 {
    const LOG2E: f32 = std::f32::consts::LOG2_E;
    let x = x.min(88.0).max(-87.0);
    let k = (x * LOG2E + 0.5).floor();
    let r = (x - k * 0.693_359_375) - k * (-2.121_944_4e-4);
    let p = 1.9875691500e-4_f32;
    let p = p * r + 1.3981999507e-3;
    let p = p * r + 8.3334519073e-3;
    let p = p * r + 4.1665795894e-2;
    let p = p * r + 1.6666665459e-1;
    let p = p * r + 5.0000001201e-1;
    let p = p * r * r + r + 1.0;
    p * f32::from_bits((((k as i32) + 127) << 23) as u32)
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let big = Tensor::<f32>::randn(&[256, 4, 128], 1.0, &mut rng);
    let mut out = vec![0.0f32; big.numel()];

    timeit("raw gelu loop 131k", || {
        for (o, &x) in out.iter_mut().zip(big.data()) {
            let z = 1.5957692 * (x + 0.044715 * x * x * x);
            let s = 1.0 / (1.0 + exp_f32(-z));
            *o = x * s;
        }
        std::hint::black_box(&out);
    });
    timeit("op gelu 131k", || {
        let t = Tape::new();
        let _ = t.constant(&big).gelu();
    });

    // alignment losses on desk-sized features
    let h = Tensor::<f32>::randn(&[32, 8, 64], 1.0, &mut rng);
    timeit("epoch+seq losses on (32,8,64)", || {
        let t = Tape::new();
        let hv = t.leaf(&h, true);
        let banks: Vec<_> = (0..4).map(|d| hv.slice(0, d * 8, (d + 1) * 8).reshape(&[64, 64])).collect();
        let ep = losses::epoch_level_loss(&banks, losses::PairMode::Unordered).unwrap();
        let rs: Vec<_> = (0..4).map(|d| losses::domain_correlation(hv.slice(0, d * 8, (d + 1) * 8)).unwrap()).collect();
        let sq = losses::sequence_level_loss(&rs, losses::PairMode::Unordered).unwrap();
        let _ = t.backward((ep + sq).sum_all());
    });

    // softmax at attention score shape
    let scores = Tensor::<f32>::randn(&[32, 4, 8, 8], 1.0, &mut rng);
    timeit("softmax (32,4,8,8) axis3", || {
        let t = Tape::new();
        let _ = t.constant(&scores).softmax(3);
    });

    // layer norm over channels, current permute-LN-permute pattern
    let g = Tensor::<f32>::full(&[4], 1.0);
    timeit("permute+LN+permute (256,4,128)", || {
        let t = Tape::new();
        let p = t.constant(&big).permute(&[0, 2, 1]);
        let ln = p.layer_norm(t.constant(&g), t.constant(&g), 1e-5);
        let _ = ln.permute(&[0, 2, 1]);
    });
    // bias-style broadcast backward
    timeit("reduce (256,4,128)->(4,1) style bwd", || {
        let t = Tape::new();
        let b = t.leaf(&Tensor::zeros(&[4, 1]), true);
        let s = t.constant(&big).add_var(b);
        let _ = t.backward(s.mean_all());
    });
}

#[allow(dead_code)]
fn lanes_probe() {}
