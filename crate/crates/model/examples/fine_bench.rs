//! Finer breakdown: attention internals, LN, decode stages, backward.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{Tape, Tensor};
use sleepalign_model::{Mode, ModelConfig, StagingModel};
use std::time::Instant;

fn timeit(label: &str, mut f: impl FnMut()) {
    let t0 = Instant::now();
    let iters = 20;
    for _ in 0..iters { f(); }
    println!("{label}: {:.2} ms", t0.elapsed().as_secs_f64() / iters as f64 * 1e3);
}

fn main() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Tensor::<f32>::randn(&[32, 8, 256, 2], 1.0, &mut rng);
    let h0 = Tensor::<f32>::randn(&[32, 8, 64], 1.0, &mut rng);

    timeit("bind params", || {
        let tape = Tape::new();
        let _ = model.bind(&tape);
    });
    timeit("leaf(x)+reshape+permute", || {
        let tape = Tape::new();
        let _ = tape.constant(&x).reshape(&[256, 256, 2]).permute(&[0, 2, 1]);
    });
    timeit("encode_context fwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let _ = bound.encode_context(tape.constant(&h0), &mut Mode::Eval);
    });
    timeit("decode fwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let _ = bound.decode(tape.constant(&h0), &mut Mode::Eval);
    });
    timeit("intra fwd+bwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let h = bound.encode_intra(tape.constant(&x), &mut Mode::Eval);
        let _ = tape.backward(h.sqr().mean_all());
    });
    timeit("context fwd+bwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let h = bound.encode_context(tape.constant(&h0), &mut Mode::Eval);
        let _ = tape.backward(h.sqr().mean_all());
    });
    timeit("decode fwd+bwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let h = bound.decode(tape.constant(&h0), &mut Mode::Eval);
        let _ = tape.backward(h.sqr().mean_all());
    });
}
