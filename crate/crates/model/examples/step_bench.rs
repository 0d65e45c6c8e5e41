//! Per-stage wall-clock breakdown of a desk-scale training step.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{Tape, Tensor};
use sleepalign_losses as losses;
use sleepalign_model::{Mode, ModelConfig, StagingModel};
use std::time::Instant;

fn timeit(label: &str, mut f: impl FnMut()) {
    let t0 = Instant::now();
    let iters = 10;
    for _ in 0..iters { f(); }
    println!("{label}: {:.1} ms", t0.elapsed().as_secs_f64() / iters as f64 * 1e3);
}

fn main() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Tensor::<f32>::randn(&[32, 8, 256, 2], 1.0, &mut rng);
    let mut labels = Tensor::<f32>::zeros(&[32, 8, 5]);
    for i in 0..32 * 8 { labels.data_mut()[i * 5 + i % 5] = 1.0; }

    timeit("encode fwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let _ = bound.encode(tape.constant(&x), &mut Mode::Eval);
    });
    timeit("encode intra only", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let _ = bound.encode_intra(tape.constant(&x), &mut Mode::Eval);
    });
    timeit("encode+decode fwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let h = bound.encode(tape.constant(&x), &mut Mode::Eval);
        let _ = bound.decode(h, &mut Mode::Eval);
    });
    timeit("enc fwd+bwd(cls)", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let h = bound.encode(tape.constant(&x), &mut Mode::Eval);
        let probs = bound.classify(h);
        let cls = losses::classification_loss(probs, &labels).unwrap();
        let _ = tape.backward(cls);
    });
    timeit("full fwd+bwd", || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let xv = tape.constant(&x);
        let h = bound.encode(xv, &mut Mode::Eval);
        let xhat = bound.decode(h, &mut Mode::Eval);
        let probs = bound.classify(h);
        let cls = losses::classification_loss(probs, &labels).unwrap();
        let rec = losses::reconstruction_loss(xv, xhat);
        let banks: Vec<_> = (0..4).map(|d| h.slice(0, d * 8, (d + 1) * 8).reshape(&[64, 64])).collect();
        let ep = losses::epoch_level_loss(&banks, losses::PairMode::Unordered).unwrap();
        let rs: Vec<_> = (0..4).map(|d| losses::domain_correlation(h.slice(0, d * 8, (d + 1) * 8)).unwrap()).collect();
        let sq = losses::sequence_level_loss(&rs, losses::PairMode::Unordered).unwrap();
        let total = losses::total_loss(cls, Some(rec), Some(ep), Some(sq), &losses::LossWeights::default()).unwrap();
        let _ = tape.backward(total);
    });
}
