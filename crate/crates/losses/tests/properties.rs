//! Property tests for the loss invariants.

use proptest::prelude::*;
use sleepalign_autodiff::{Tape, Tensor, Var};
use sleepalign_losses::*;

fn tensor_strategy(rows: usize, dim: usize) -> impl Strategy<Value = Tensor<f64>> {
    prop::collection::vec(-3.0f64..3.0, rows * dim)
        .prop_map(move |v| Tensor::from_f64(&[rows, dim], &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn epoch_level_non_negative_and_swap_symmetric(
        a in tensor_strategy(4, 3),
        b in tensor_strategy(5, 3),
    ) {
        let tape = Tape::new();
        let fwd = epoch_level_loss(&[tape.constant(&a), tape.constant(&b)], PairMode::Unordered)
            .unwrap()
            .scalar_value();
        prop_assert!(fwd >= 0.0);
        let rev = epoch_level_loss(&[tape.constant(&b), tape.constant(&a)], PairMode::Unordered)
            .unwrap()
            .scalar_value();
        prop_assert!((fwd - rev).abs() <= 1e-9 * fwd.max(1.0));
    }

    #[test]
    fn epoch_level_invariant_to_within_domain_permutation(
        a in tensor_strategy(5, 3),
        b in tensor_strategy(4, 3),
        seed in 0u64..1000,
    ) {
        let rows = a.shape()[0];
        let mut order: Vec<usize> = (0..rows).collect();
        // cheap seeded shuffle
        let mut s = seed;
        for i in (1..rows).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let dim = a.shape()[1];
        let mut permuted = vec![0.0; rows * dim];
        for (new_r, &old_r) in order.iter().enumerate() {
            permuted[new_r * dim..(new_r + 1) * dim]
                .copy_from_slice(&a.data()[old_r * dim..(old_r + 1) * dim]);
        }
        let permuted = Tensor::from_f64(&[rows, dim], &permuted);

        let tape = Tape::new();
        let base = epoch_level_loss(&[tape.constant(&a), tape.constant(&b)], PairMode::Unordered)
            .unwrap()
            .scalar_value();
        let after = epoch_level_loss(&[tape.constant(&permuted), tape.constant(&b)], PairMode::Unordered)
            .unwrap()
            .scalar_value();
        prop_assert!((base - after).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn pearson_entries_bounded_and_affine_invariant(
        seq in tensor_strategy(3, 6),
        gain in 0.1f64..4.0,
        shift in -2.0f64..2.0,
    ) {
        let tape = Tape::new();
        let r = pearson_matrix(tape.constant(&seq)).value();
        for v in r.data() {
            prop_assert!(*v <= 1.0 + 1e-9 && *v >= -1.0 - 1e-9);
        }
        let mapped = Tensor::from_f64(
            &[3, 6],
            &seq.data().iter().map(|v| gain * v + shift).collect::<Vec<_>>(),
        );
        let rm = pearson_matrix(tape.constant(&mapped)).value();
        for (x, y) in r.data().iter().zip(rm.data().iter()) {
            prop_assert!((x - y).abs() <= 2e-5, "{x} vs {y}");
        }
    }

    #[test]
    fn losses_vanish_on_identical_domains(bank in tensor_strategy(5, 4)) {
        let tape = Tape::new();
        let banks = [tape.constant(&bank), tape.constant(&bank), tape.constant(&bank)];
        prop_assert_eq!(
            epoch_level_loss(&banks, PairMode::Unordered).unwrap().scalar_value(),
            0.0
        );
        prop_assert_eq!(
            mmd_loss(&banks, PairMode::Unordered).unwrap().scalar_value().abs() < 1e-12,
            true
        );
        let feats = Tensor::from_f64(
            &[1, 5, 4],
            bank.data(),
        );
        let rs: Vec<Var<'_, f64>> = (0..3)
            .map(|_| domain_correlation(tape.constant(&feats)).unwrap())
            .collect();
        prop_assert_eq!(
            sequence_level_loss(&rs, PairMode::Unordered).unwrap().scalar_value(),
            0.0
        );
    }
}
