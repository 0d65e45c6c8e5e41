//! Shape contracts, determinism, weight sharing and probability guarantees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{grad_check, Tape, Tensor, DEFAULT_STEP};
use sleepalign_model::{Mode, ModelConfig, StagingModel};

fn desk_batch(batch: usize, seed: u64) -> Tensor<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::randn(&[batch, 8, 256, 2], 1.0, &mut rng)
}

#[test]
fn encode_shape_contract() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 1);
    let tape = Tape::new();
    let bound = model.bind(&tape);
    let x = tape.constant(&desk_batch(2, 10));
    let h = bound.encode(x, &mut Mode::Eval);
    assert_eq!(h.shape(), vec![2, 8, 64]);
}

#[test]
fn eval_mode_is_deterministic() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 2);
    let x = desk_batch(2, 11);
    let run = || {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        bound.encode(tape.constant(&x), &mut Mode::Eval).value()
    };
    assert_eq!(run(), run());
}

#[test]
fn zero_input_gives_finite_outputs() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 3);
    let tape = Tape::new();
    let bound = model.bind(&tape);
    let x = tape.constant(&Tensor::zeros(&[1, 8, 256, 2]));
    let h = bound.encode(x, &mut Mode::Eval);
    assert!(h.value().data().iter().all(|v| v.is_finite()));
    let probs = bound.classify(h);
    assert!(probs.value().data().iter().all(|v| v.is_finite()));
}

#[test]
fn decode_restores_input_shape() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 4);
    let tape = Tape::new();
    let bound = model.bind(&tape);
    let x = tape.constant(&desk_batch(2, 12));
    let h = bound.encode(x, &mut Mode::Eval);
    let xhat = bound.decode(h, &mut Mode::Eval);
    assert_eq!(xhat.shape(), x.shape());
}

#[test]
fn classifier_rows_are_distributions() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 5);
    let tape = Tape::new();
    let bound = model.bind(&tape);
    let h = bound.encode(tape.constant(&desk_batch(3, 13)), &mut Mode::Eval);
    let probs = bound.classify(h).value();
    for row in probs.data().chunks(5) {
        let sum: f32 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6, "row sums to {sum}");
        assert!(row.iter().all(|p| *p >= 0.0));
    }
}

#[test]
fn zeroed_classifier_gives_uniform_fifth() {
    let cfg = ModelConfig::desk();
    let mut model = StagingModel::<f32>::new(&cfg, 6);
    for name in ["cls.w", "cls.b"] {
        let idx = model.params().index_of(name).unwrap();
        let shape = model.params().tensor(idx).shape().to_vec();
        *model.params_mut().tensor_mut(idx) = Tensor::zeros(&shape);
    }
    let tape = Tape::new();
    let bound = model.bind(&tape);
    let h = bound.encode(tape.constant(&desk_batch(1, 14)), &mut Mode::Eval);
    let probs = bound.classify(h).value();
    for p in probs.data() {
        assert!((p - 0.2).abs() < 1e-7);
    }
}

#[test]
fn classifier_probs_invariant_to_constant_logit_shift() {
    // adding the same constant to every class logit (via the bias) must not
    // change the probabilities, hence not the argmax
    let cfg = ModelConfig::desk();
    let mut model = StagingModel::<f32>::new(&cfg, 7);
    let x = desk_batch(2, 15);
    let probs = |m: &StagingModel<f32>| {
        let tape = Tape::new();
        let b = m.bind(&tape);
        let h = b.encode(tape.constant(&x), &mut Mode::Eval);
        b.classify(h).value()
    };
    let before = probs(&model);
    let idx = model.params().index_of("cls.b").unwrap();
    for v in model.params_mut().tensor_mut(idx).data_mut() {
        *v += 3.7;
    }
    let after = probs(&model);
    for (a, b) in before.data().iter().zip(after.data().iter()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn encode_is_batch_permutation_equivariant() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 8);
    let a = desk_batch(1, 20);
    let b = desk_batch(1, 21);
    let stack = |first: &Tensor<f32>, second: &Tensor<f32>| {
        let mut data = first.data().to_vec();
        data.extend_from_slice(second.data());
        Tensor::new(vec![2, 8, 256, 2], data)
    };
    let run = |batch: &Tensor<f32>| {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        bound.encode(tape.constant(batch), &mut Mode::Eval).value()
    };
    let ab = run(&stack(&a, &b));
    let ba = run(&stack(&b, &a));
    let half = 8 * 64;
    assert_eq!(&ab.data()[..half], &ba.data()[half..]);
    assert_eq!(&ab.data()[half..], &ba.data()[..half]);
}

#[test]
fn intra_epoch_encoder_shares_weights_across_positions() {
    // the same epoch placed at two sequence positions must produce identical
    // pre-attention features
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let epoch = Tensor::<f32>::randn(&[256 * 2], 1.0, &mut rng);
    let other = Tensor::<f32>::randn(&[256 * 2], 1.0, &mut rng);
    let mut data = Vec::new();
    for pos in 0..8 {
        let src = if pos == 1 || pos == 5 { &epoch } else { &other };
        data.extend_from_slice(src.data());
    }
    let batch = Tensor::new(vec![1, 8, 256, 2], data);
    let tape = Tape::new();
    let bound = model.bind(&tape);
    let intra = bound
        .encode_intra(tape.constant(&batch), &mut Mode::Eval)
        .value();
    let row = |l: usize| &intra.data()[l * 64..(l + 1) * 64];
    assert_eq!(row(1), row(5), "shared epoch encoder must be position independent");
    assert_ne!(row(1), row(2));
}

#[test]
fn train_mode_dropout_is_seeded_and_differs_from_eval() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 10);
    let x = desk_batch(1, 30);
    let train_run = |seed: u64| {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        bound
            .encode(tape.constant(&x), &mut Mode::Train { rng: &mut rng })
            .value()
    };
    assert_eq!(train_run(5), train_run(5));
    let eval = {
        let tape = Tape::new();
        let bound = model.bind(&tape);
        bound.encode(tape.constant(&x), &mut Mode::Eval).value()
    };
    assert_ne!(train_run(5), eval);
}

#[test]
fn config_validation_rejects_bad_geometry() {
    let mut cfg = ModelConfig::desk();
    cfg.feature_dim = 30; // not divisible by 4 heads
    assert!(cfg.validate().is_err());

    let mut cfg = ModelConfig::desk();
    cfg.samples_per_epoch = 100; // 100 % 8 != 0
    assert!(cfg.validate().is_err());

    let mut cfg = ModelConfig::desk();
    cfg.seq_len = 1;
    assert!(cfg.validate().is_err());

    let mut cfg = ModelConfig::desk();
    cfg.num_stages = 4;
    assert!(cfg.validate().is_err());

    assert!(ModelConfig::desk().validate().is_ok());
    assert!(ModelConfig::paper_scale().validate().is_ok());
}

#[test]
#[should_panic(expected = "does not match config")]
fn encode_rejects_wrong_shape() {
    let cfg = ModelConfig::desk();
    let model = StagingModel::<f32>::new(&cfg, 11);
    let tape = Tape::new();
    let bound = model.bind(&tape);
    let x = tape.constant(&Tensor::zeros(&[1, 8, 128, 2]));
    let _ = bound.encode(x, &mut Mode::Eval);
}

#[test]
fn reconstruction_gradient_through_decoder_passes_gradcheck() {
    let cfg = ModelConfig::tiny();
    let model = StagingModel::<f64>::new(&cfg, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let x = Tensor::<f64>::randn(&[2, 3, 16, 2], 1.0, &mut rng);
    let inputs: Vec<Tensor<f64>> = (0..model.params().len())
        .map(|i| model.params().tensor(i).clone())
        .collect();
    let err = grad_check(
        |tape, vars| {
            let bound = model.bind_external(vars.to_vec());
            let xv = tape.constant(&x);
            let h = bound.encode(xv, &mut Mode::Eval);
            let xhat = bound.decode(h, &mut Mode::Eval);
            sleepalign_losses::reconstruction_loss(xv, xhat)
        },
        &inputs,
        DEFAULT_STEP,
    );
    assert!(err < 1e-4, "decoder path gradient check: {err}");
}
