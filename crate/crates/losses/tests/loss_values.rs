//! Value-level checks: hand-derived cases and brute-force oracle agreement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sleepalign_autodiff::{Tape, Tensor, Var};
use sleepalign_losses::*;
use sleepalign_oracle as oracle;

fn bank<'t>(tape: &'t Tape<f64>, rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Var<'t, f64> {
    tape.leaf(&Tensor::randn(&[rows, dim], 1.0, rng), true)
}

// --- reconstruction -------------------------------------------------------

#[test]
fn reconstruction_zero_for_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Tensor::<f64>::randn(&[2, 3, 4, 2], 1.0, &mut rng);
    let tape = Tape::new();
    let (a, b) = (tape.constant(&x), tape.constant(&x));
    assert_eq!(reconstruction_loss(a, b).scalar_value(), 0.0);
}

#[test]
fn reconstruction_single_epoch_all_ones_residual() {
    // B=1, L=1, n*C = 6, residual of ones -> squared norm 6.
    let tape = Tape::<f64>::new();
    let x = tape.constant(&Tensor::full(&[1, 1, 3, 2], 1.0));
    let xhat = tape.constant(&Tensor::zeros(&[1, 1, 3, 2]));
    assert_eq!(reconstruction_loss(x, xhat).scalar_value(), 6.0);
}

#[test]
fn reconstruction_quadratic_in_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Tensor::<f64>::randn(&[2, 2, 5, 2], 1.0, &mut rng);
    let r = Tensor::<f64>::randn(&[2, 2, 5, 2], 0.5, &mut rng);
    let tape = Tape::new();
    let xv = tape.constant(&x);
    let x_plus_r = {
        let mut d = x.clone();
        for (a, b) in d.data_mut().iter_mut().zip(r.data()) {
            *a += b;
        }
        tape.constant(&d)
    };
    let x_plus_2r = {
        let mut d = x.clone();
        for (a, b) in d.data_mut().iter_mut().zip(r.data()) {
            *a += 2.0 * b;
        }
        tape.constant(&d)
    };
    let l1 = reconstruction_loss(xv, x_plus_r).scalar_value();
    let l2 = reconstruction_loss(xv, x_plus_2r).scalar_value();
    assert!((l2 - 4.0 * l1).abs() < 1e-10 * l1.abs().max(1.0));
}

#[test]
fn reconstruction_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x = Tensor::<f64>::randn(&[3, 4, 6, 2], 1.0, &mut rng);
        let y = Tensor::<f64>::randn(&[3, 4, 6, 2], 1.0, &mut rng);
        let tape = Tape::new();
        let got = reconstruction_loss(tape.constant(&x), tape.constant(&y)).scalar_value();
        let want = oracle::losses::reconstruction(x.data(), y.data(), 3, 4, 12);
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
#[should_panic(expected = "shape mismatch")]
fn reconstruction_shape_mismatch_panics() {
    let tape = Tape::<f64>::new();
    let x = tape.constant(&Tensor::zeros(&[1, 2, 3, 2]));
    let y = tape.constant(&Tensor::zeros(&[1, 2, 3, 1]));
    let _ = reconstruction_loss(x, y);
}

// --- epoch-level ----------------------------------------------------------

#[test]
fn first_order_identical_banks_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = Tensor::<f64>::randn(&[5, 3], 1.0, &mut rng);
    let tape = Tape::new();
    let banks = [tape.constant(&t), tape.constant(&t)];
    assert_eq!(epoch_first_order(&banks, PairMode::Unordered).unwrap().scalar_value(), 0.0);
}

#[test]
fn first_order_hand_value_25() {
    // means (0,0) and (3,4): squared distance 25.
    let tape = Tape::<f64>::new();
    let a = tape.constant(&Tensor::from_f64(&[1, 2], &[0.0, 0.0]));
    let b = tape.constant(&Tensor::from_f64(&[1, 2], &[3.0, 4.0]));
    assert_eq!(epoch_first_order(&[a, b], PairMode::Unordered).unwrap().scalar_value(), 25.0);
}

#[test]
fn first_order_quadratic_homogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t1 = Tensor::<f64>::randn(&[4, 3], 1.0, &mut rng);
    let t2 = Tensor::<f64>::randn(&[6, 3], 1.0, &mut rng);
    let scale = 3.0;
    let tape = Tape::new();
    let l = epoch_first_order(&[tape.constant(&t1), tape.constant(&t2)], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    let s1 = Tensor::from_f64(&[4, 3], &t1.data().iter().map(|v| v * scale).collect::<Vec<_>>());
    let s2 = Tensor::from_f64(&[6, 3], &t2.data().iter().map(|v| v * scale).collect::<Vec<_>>());
    let ls = epoch_first_order(&[tape.constant(&s1), tape.constant(&s2)], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    assert!((ls - scale * scale * l).abs() < 1e-9 * l.max(1.0));
}

#[test]
fn second_order_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = Tensor::<f64>::randn(&[6, 4], 1.0, &mut rng);
    // reversed row order
    let mut rev = vec![0.0; 24];
    for r in 0..6 {
        rev[(5 - r) * 4..(6 - r) * 4].copy_from_slice(&t.data()[r * 4..(r + 1) * 4]);
    }
    let rev = Tensor::from_f64(&[6, 4], &rev);
    let tape = Tape::new();
    let loss = epoch_second_order(&[tape.constant(&t), tape.constant(&rev)], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    assert!(loss.abs() < 1e-18, "covariance must ignore row order, got {loss}");
}

#[test]
fn epoch_losses_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let rows = [3 + rng.gen_range(0..4), 4 + rng.gen_range(0..3), 2 + rng.gen_range(0..5)];
        let dim = 3 + rng.gen_range(0..3);
        let tensors: Vec<Tensor<f64>> = rows
            .iter()
            .map(|&r| Tensor::randn(&[r, dim], 1.0, &mut rng))
            .collect();
        let tape = Tape::new();
        let banks: Vec<Var<'_, f64>> = tensors.iter().map(|t| tape.constant(t)).collect();
        let ref_banks: Vec<(usize, Vec<f64>)> = tensors
            .iter()
            .map(|t| (t.shape()[0], t.data().to_vec()))
            .collect();

        let first = epoch_first_order(&banks, PairMode::Unordered).unwrap().scalar_value();
        assert!((first - oracle::losses::first_order(&ref_banks, dim)).abs() < 1e-10);

        let second = epoch_second_order(&banks, PairMode::Unordered).unwrap().scalar_value();
        assert!((second - oracle::losses::second_order(&ref_banks, dim)).abs() < 1e-10);

        let level = epoch_level_loss(&banks, PairMode::Unordered).unwrap().scalar_value();
        assert_eq!(level, first + second, "epoch level must be the exact sum");

        let ordered = epoch_level_loss(&banks, PairMode::Ordered).unwrap().scalar_value();
        assert_eq!(ordered, level * 2.0);
    }
}

#[test]
fn epoch_loss_symmetric_under_domain_swap() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = Tensor::<f64>::randn(&[5, 3], 1.0, &mut rng);
    let b = Tensor::<f64>::randn(&[4, 3], 1.0, &mut rng);
    let tape = Tape::new();
    let fwd = epoch_level_loss(&[tape.constant(&a), tape.constant(&b)], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    let rev = epoch_level_loss(&[tape.constant(&b), tape.constant(&a)], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    assert!((fwd - rev).abs() < 1e-12 * fwd.max(1.0));
}

#[test]
fn epoch_losses_contract_errors() {
    let tape = Tape::<f64>::new();
    let single = tape.constant(&Tensor::zeros(&[3, 2]));
    assert!(matches!(
        epoch_first_order(&[single], PairMode::Unordered),
        Err(LossError::NotEnoughDomains { got: 1 })
    ));
    let one_row = tape.constant(&Tensor::zeros(&[1, 2]));
    let ok = tape.constant(&Tensor::zeros(&[3, 2]));
    assert!(matches!(
        epoch_second_order(&[one_row, ok], PairMode::Unordered),
        Err(LossError::TooFewSamples { index: 0, rows: 1 })
    ));
}

// --- sequence-level -------------------------------------------------------

#[test]
fn pearson_diagonal_is_exactly_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seq = Tensor::<f64>::randn(&[4, 6], 1.0, &mut rng);
    let tape = Tape::new();
    let r = pearson_matrix(tape.constant(&seq)).value();
    for i in 0..4 {
        assert_eq!(r.at(&[i, i]), 1.0);
    }
}

#[test]
fn pearson_antisymmetric_vector_gives_minus_one() {
    let tape = Tape::<f64>::new();
    let h = [0.3, -1.0, 2.0, 0.7];
    let seq: Vec<f64> = h.iter().copied().chain(h.iter().map(|v| -v)).collect();
    let r = pearson_matrix(tape.constant(&Tensor::from_f64(&[2, 4], &seq))).value();
    assert!((r.at(&[0, 1]) + 1.0).abs() < 1e-6);
    assert!((r.at(&[1, 0]) + 1.0).abs() < 1e-6);
}

#[test]
fn pearson_positive_affine_relation_gives_plus_one() {
    let tape = Tape::<f64>::new();
    let seq = Tensor::from_f64(&[2, 3], &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
    let r = pearson_matrix(tape.constant(&seq)).value();
    assert!((r.at(&[0, 1]) - 1.0).abs() < 1e-6);
}

#[test]
fn pearson_matches_oracle_and_stays_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let l = 2 + rng.gen_range(0..4);
        let d = 3 + rng.gen_range(0..5);
        let seq = Tensor::<f64>::randn(&[l, d], 1.0, &mut rng);
        let tape = Tape::new();
        let r = pearson_matrix(tape.constant(&seq)).value();
        let want = oracle::stats::pearson_matrix(seq.data(), l, d, PEARSON_EPS);
        for (got, want) in r.data().iter().zip(want.iter()) {
            assert!((got - want).abs() < 1e-10);
            assert!(*got <= 1.0 + 1e-9 && *got >= -1.0 - 1e-9);
        }
    }
}

#[test]
fn pearson_invariant_under_positive_affine_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let seq = Tensor::<f64>::randn(&[3, 8], 1.0, &mut rng);
    let mapped = Tensor::from_f64(
        &[3, 8],
        &seq.data().iter().map(|v| 2.5 * v - 0.7).collect::<Vec<_>>(),
    );
    let tape = Tape::new();
    let r0 = pearson_matrix(tape.constant(&seq)).value();
    let r1 = pearson_matrix(tape.constant(&mapped)).value();
    for (a, b) in r0.data().iter().zip(r1.data().iter()) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

#[test]
fn domain_correlation_averages() {
    let tape = Tape::<f64>::new();
    // single sequence: average equals the sequence matrix
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let seq = Tensor::<f64>::randn(&[1, 3, 6], 1.0, &mut rng);
    let avg = domain_correlation(tape.constant(&seq)).unwrap().value();
    let single =
        pearson_matrix(tape.constant(&seq).reshape(&[3, 6])).value();
    for (a, b) in avg.data().iter().zip(single.data().iter()) {
        assert!((a - b).abs() < 1e-15);
    }

    // k identical sequences: the average equals the single-sequence matrix
    let h = Tensor::<f64>::randn(&[1, 3, 6], 1.0, &mut rng);
    let k_identical = {
        let mut d = Vec::new();
        for _ in 0..4 {
            d.extend_from_slice(h.data());
        }
        Tensor::from_f64(&[4, 3, 6], &d)
    };
    let avg_k = domain_correlation(tape.constant(&k_identical)).unwrap().value();
    let one = pearson_matrix(tape.constant(&h).reshape(&[3, 6])).value();
    for (a, b) in avg_k.data().iter().zip(one.data().iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn domain_correlation_opposite_offdiagonals_cancel() {
    // two sequences whose correlation matrices are R and R with negated
    // off-diagonals: average has zero off-diagonals, unit diagonal.
    let h = [1.0, -1.0, 2.0, 0.5, 1.5, -0.5];
    let seq_a: Vec<f64> = h.iter().copied().chain(h.iter().copied()).collect(); // rho=+1
    let seq_b: Vec<f64> = h.iter().copied().chain(h.iter().map(|v| -v)).collect(); // rho=-1
    let mut data = seq_a.clone();
    data.extend_from_slice(&seq_b);
    let tape = Tape::<f64>::new();
    let avg = domain_correlation(tape.constant(&Tensor::from_f64(&[2, 2, 6], &data)))
        .unwrap()
        .value();
    assert_eq!(avg.at(&[0, 0]), 1.0);
    assert_eq!(avg.at(&[1, 1]), 1.0);
    assert!(avg.at(&[0, 1]).abs() < 1e-9);
    assert!(avg.at(&[1, 0]).abs() < 1e-9);
}

#[test]
fn sequence_loss_hand_value() {
    // two 2x2 matrices, unit diagonal, off-diagonals 0.5 vs 0.0 -> 0.5
    let tape = Tape::<f64>::new();
    let r1 = tape.constant(&Tensor::from_f64(&[2, 2], &[1.0, 0.5, 0.5, 1.0]));
    let r2 = tape.constant(&Tensor::from_f64(&[2, 2], &[1.0, 0.0, 0.0, 1.0]));
    let loss = sequence_level_loss(&[r1, r2], PairMode::Unordered).unwrap();
    assert_eq!(loss.scalar_value(), 0.5);
}

#[test]
fn sequence_loss_identical_zero_and_oracle_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let tape = Tape::<f64>::new();
    let feats: Vec<Tensor<f64>> = (0..3)
        .map(|_| Tensor::randn(&[4, 3, 6], 1.0, &mut rng))
        .collect();
    let rs: Vec<Var<'_, f64>> = feats
        .iter()
        .map(|f| domain_correlation(tape.constant(f)).unwrap())
        .collect();
    let loss = sequence_level_loss(&rs, PairMode::Unordered).unwrap().scalar_value();
    let mats: Vec<Vec<f64>> = rs.iter().map(|r| r.value().data().to_vec()).collect();
    let want = oracle::losses::pairwise_frob_sq(&mats);
    assert!((loss - want).abs() < 1e-10);

    let same = sequence_level_loss(&[rs[0], rs[0]], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    assert_eq!(same, 0.0);
}

#[test]
fn sequence_loss_invariant_under_shared_epoch_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let feats: Vec<Tensor<f64>> = (0..3)
        .map(|_| Tensor::randn(&[2, 4, 5], 1.0, &mut rng))
        .collect();
    let perm = [2usize, 0, 3, 1];
    let permute = |t: &Tensor<f64>| {
        let mut out = vec![0.0; t.numel()];
        for b in 0..2 {
            for (new_l, &old_l) in perm.iter().enumerate() {
                for c in 0..5 {
                    out[(b * 4 + new_l) * 5 + c] = t.at(&[b, old_l, c]);
                }
            }
        }
        Tensor::from_f64(&[2, 4, 5], &out)
    };
    let tape = Tape::new();
    let loss = |fs: &[Tensor<f64>]| {
        let rs: Vec<Var<'_, f64>> = fs
            .iter()
            .map(|f| domain_correlation(tape.constant(f)).unwrap())
            .collect();
        sequence_level_loss(&rs, PairMode::Unordered).unwrap().scalar_value()
    };
    let base = loss(&feats);
    let permuted: Vec<Tensor<f64>> = feats.iter().map(permute).collect();
    let after = loss(&permuted);
    assert!((base - after).abs() < 1e-10 * base.max(1.0));
}

// --- classification -------------------------------------------------------

#[test]
fn cross_entropy_perfect_prediction_is_zero() {
    let tape = Tape::<f64>::new();
    let onehot = Tensor::from_f64(&[1, 2, 3], &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let probs = tape.constant(&onehot);
    assert_eq!(classification_loss(probs, &onehot).unwrap().scalar_value(), 0.0);
}

#[test]
fn cross_entropy_uniform_is_l_times_ln_classes() {
    let tape = Tape::<f64>::new();
    let l = 7;
    let probs = tape.constant(&Tensor::full(&[2, l, 5], 0.2));
    let mut labels = Tensor::zeros(&[2, l, 5]);
    for b in 0..2 {
        for k in 0..l {
            labels.data_mut()[(b * l + k) * 5 + (k % 5)] = 1.0;
        }
    }
    let got = classification_loss(probs, &labels).unwrap().scalar_value();
    let want = l as f64 * 5.0f64.ln();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn cross_entropy_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let (b, l, n) = (3, 4, 5);
        let logits = Tensor::<f64>::randn(&[b, l, n], 2.0, &mut rng);
        let tape = Tape::new();
        let probs = tape.constant(&logits).softmax(2);
        let mut labels = Tensor::zeros(&[b, l, n]);
        for i in 0..b * l {
            let class = rng.gen_range(0..n);
            labels.data_mut()[i * n + class] = 1.0;
        }
        let got = classification_loss(probs, &labels).unwrap().scalar_value();
        let want = oracle::losses::cross_entropy(
            probs.value().data(),
            labels.data(),
            b,
            l,
            n,
            CE_GUARD,
        );
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn cross_entropy_rejects_bad_labels() {
    let tape = Tape::<f64>::new();
    let probs = tape.constant(&Tensor::full(&[1, 1, 5], 0.2));
    let labels = Tensor::from_f64(&[1, 1, 5], &[0.5, 0.5, 0.0, 0.0, 0.0]);
    assert!(matches!(
        classification_loss(probs, &labels),
        Err(LossError::LabelNotOneHot { batch: 0, epoch: 0 })
    ));
}

// --- total ----------------------------------------------------------------

#[test]
fn total_loss_reduces_to_classification_when_unweighted() {
    let tape = Tape::<f64>::new();
    let cls = tape.scalar(1.25);
    let total = total_loss(cls, None, None, None, &LossWeights::default()).unwrap();
    assert_eq!(total.scalar_value(), 1.25);
}

#[test]
fn total_loss_arithmetic_with_halves() {
    let tape = Tape::<f64>::new();
    let one = tape.scalar(1.0);
    let w = LossWeights::default(); // 0.5 each
    let total = total_loss(one, Some(one), Some(one), Some(one), &w).unwrap();
    assert_eq!(total.scalar_value(), 2.5);
}

#[test]
fn total_loss_names_non_finite_term() {
    let tape = Tape::<f64>::new();
    let cls = tape.scalar(1.0);
    let bad = tape.scalar(0.0).ln_guarded(0.0); // -inf
    let err = total_loss(cls, None, Some(bad), None, &LossWeights::default()).unwrap_err();
    match err {
        LossError::NonFinite { term, .. } => assert_eq!(term, "epoch"),
        other => panic!("unexpected error {other:?}"),
    }
}

// --- baselines ------------------------------------------------------------

#[test]
fn mmd_zero_on_identical_banks_and_orders_separation() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let t = Tensor::<f64>::randn(&[10, 3], 1.0, &mut rng);
    let tape = Tape::new();
    let same = mmd_loss(&[tape.constant(&t), tape.constant(&t)], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    assert!(same.abs() < 1e-12, "identical banks should give 0, got {same}");

    // well-separated vs overlapping clouds, same sizes and seeds
    let near = Tensor::<f64>::randn(&[12, 3], 1.0, &mut ChaCha8Rng::seed_from_u64(17));
    let far = {
        let base = Tensor::<f64>::randn(&[12, 3], 1.0, &mut ChaCha8Rng::seed_from_u64(18));
        Tensor::from_f64(&[12, 3], &base.data().iter().map(|v| v + 6.0).collect::<Vec<_>>())
    };
    let overlap = Tensor::<f64>::randn(&[12, 3], 1.0, &mut ChaCha8Rng::seed_from_u64(18));
    let separated = mmd_loss(&[tape.constant(&near), tape.constant(&far)], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    let overlapping = mmd_loss(
        &[tape.constant(&near), tape.constant(&overlap)],
        PairMode::Unordered,
    )
    .unwrap()
    .scalar_value();
    assert!(
        separated > overlapping,
        "separated {separated} should exceed overlapping {overlapping}"
    );
}

#[test]
fn mmd_fixed_bandwidth_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let a = Tensor::<f64>::randn(&[7, 4], 1.0, &mut rng);
    let b = Tensor::<f64>::randn(&[9, 4], 1.5, &mut rng);
    let tape = Tape::new();
    let (va, vb) = (tape.constant(&a), tape.constant(&b));
    let med = median_sq_distance(&va, &vb);
    let want_med = oracle::stats::median_pairwise_sq_dist(a.data(), 7, b.data(), 9, 4);
    assert_eq!(med, want_med);
    let got = mmd_pair_fixed_bandwidth(va, vb, med).scalar_value();
    let want = oracle::stats::mmd_sq(a.data(), 7, b.data(), 9, 4, med);
    assert!((got - want).abs() < 1e-10);
}

#[test]
fn coral_is_scaled_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let a = Tensor::<f64>::randn(&[6, 4], 1.0, &mut rng);
    let b = Tensor::<f64>::randn(&[8, 4], 1.2, &mut rng);
    let tape = Tape::new();
    let banks = [tape.constant(&a), tape.constant(&b)];
    let coral = coral_loss(&banks, PairMode::Unordered).unwrap().scalar_value();
    let second = epoch_second_order(&banks, PairMode::Unordered).unwrap().scalar_value();
    assert_eq!(coral, second * coral_scale(4));
    let same = coral_loss(&[banks[0], banks[0]], PairMode::Unordered)
        .unwrap()
        .scalar_value();
    assert_eq!(same, 0.0);
}

// --- gradients ------------------------------------------------------------

#[test]
fn all_loss_terms_pass_gradcheck_smoke() {
    use sleepalign_autodiff::{grad_check, DEFAULT_STEP};
    let mut rng = ChaCha8Rng::seed_from_u64(21);

    // reconstruction
    let x = Tensor::<f64>::randn(&[2, 2, 3, 2], 1.0, &mut rng);
    let y = Tensor::<f64>::randn(&[2, 2, 3, 2], 1.0, &mut rng);
    let err = grad_check(
        |_t, v| reconstruction_loss(v[0], v[1]),
        &[x, y],
        DEFAULT_STEP,
    );
    assert!(err < 1e-4, "reconstruction: {err}");

    // epoch level
    let banks = vec![
        Tensor::<f64>::randn(&[4, 3], 1.0, &mut rng),
        Tensor::<f64>::randn(&[5, 3], 1.0, &mut rng),
        Tensor::<f64>::randn(&[3, 3], 1.0, &mut rng),
    ];
    let err = grad_check(
        |_t, v| epoch_level_loss(v, PairMode::Unordered).unwrap(),
        &banks,
        DEFAULT_STEP,
    );
    assert!(err < 1e-4, "epoch level: {err}");

    // sequence level through pearson
    let feats = vec![
        Tensor::<f64>::randn(&[2, 3, 4], 1.0, &mut rng),
        Tensor::<f64>::randn(&[3, 3, 4], 1.0, &mut rng),
    ];
    let err = grad_check(
        |_t, v| {
            let rs: Vec<Var<'_, f64>> = v
                .iter()
                .map(|f| domain_correlation(*f).unwrap())
                .collect();
            sequence_level_loss(&rs, PairMode::Unordered).unwrap()
        },
        &feats,
        DEFAULT_STEP,
    );
    assert!(err < 1e-4, "sequence level: {err}");

    // classification through softmax
    let logits = Tensor::<f64>::randn(&[2, 3, 5], 1.0, &mut rng);
    let mut labels = Tensor::<f64>::zeros(&[2, 3, 5]);
    for i in 0..6 {
        labels.data_mut()[i * 5 + (i % 5)] = 1.0;
    }
    let err = grad_check(
        |_t, v| classification_loss(v[0].softmax(2), &labels).unwrap(),
        &[logits],
        DEFAULT_STEP,
    );
    assert!(err < 1e-4, "classification: {err}");

    // mmd with fixed bandwidth, coral
    let a = Tensor::<f64>::randn(&[5, 3], 1.0, &mut rng);
    let b = Tensor::<f64>::randn(&[6, 3], 1.0, &mut rng);
    let err = grad_check(
        |_t, v| mmd_pair_fixed_bandwidth(v[0], v[1], 2.0),
        &[a.clone(), b.clone()],
        DEFAULT_STEP,
    );
    assert!(err < 1e-4, "mmd: {err}");
    let err = grad_check(
        |_t, v| coral_loss(v, PairMode::Unordered).unwrap(),
        &[a, b],
        DEFAULT_STEP,
    );
    assert!(err < 1e-4, "coral: {err}");
}
