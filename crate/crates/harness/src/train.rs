//! End-to-end training on balanced multi-domain batches with training-domain
//! validation model selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sleepalign_autodiff::{AdamState, ParamSet, Tape, Tensor};
use sleepalign_losses as losses;
use sleepalign_model::{Mode, StagingModel};
use sleepalign_synth::{split_domain, DomainDataset};

use crate::metrics::{accumulate_confusion, MetricsReport, NUM_CLASSES};
use crate::{ExperimentConfig, HarnessError};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derived sub-seed for one purpose (model init, batch/dropout stream, ...).
pub(crate) fn subseed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_add(tag.wrapping_mul(GOLDEN)).rotate_left(17)
}

/// Per-step loss trace. Terms an arm does not compute stay `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub classify: f64,
    pub reconstruction: Option<f64>,
    pub epoch_align: Option<f64>,
    pub sequence_align: Option<f64>,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: Vec<StepTrace>,
    /// Pooled source-validation accuracy after each training epoch.
    pub val_acc: Vec<f64>,
    /// Epoch whose parameters were kept (earliest on ties).
    pub best_epoch: usize,
    pub best_val_acc: f64,
}

pub struct TrainOutcome {
    pub model: StagingModel<f32>,
    pub report: TrainReport,
}

/// Train on `sources` (exactly M domains), selecting the checkpoint that
/// maximizes pooled validation accuracy. The held-out domain never appears
/// here; evaluation on it happens separately.
pub fn train(
    cfg: &ExperimentConfig,
    sources: &[DomainDataset],
) -> Result<TrainOutcome, HarnessError> {
    cfg.validate()?;
    let m = cfg.num_source_domains;
    if sources.len() != m {
        return Err(HarnessError::WrongDomainCount {
            expected: m,
            got: sources.len(),
        });
    }
    for (i, a) in sources.iter().enumerate() {
        for b in &sources[i + 1..] {
            if a.spec.id == b.spec.id {
                return Err(HarnessError::DuplicateDomain { id: a.spec.id });
            }
        }
        let s = &a.spec;
        if s.samples_per_epoch != cfg.model.samples_per_epoch
            || s.channels != cfg.model.channels
            || s.seq_len != cfg.model.seq_len
        {
            return Err(HarnessError::Config(format!(
                "domain {} geometry ({}, {}, {}) does not match model config ({}, {}, {})",
                s.id,
                s.seq_len,
                s.samples_per_epoch,
                s.channels,
                cfg.model.seq_len,
                cfg.model.samples_per_epoch,
                cfg.model.channels
            )));
        }
    }

    let mut splits = Vec::with_capacity(m);
    for ds in sources {
        splits.push(split_domain(ds, cfg.train_fraction, cfg.seed)?);
    }
    let per_dom = cfg.batch_size / m;
    let steps_per_epoch = splits
        .iter()
        .map(|(train, _)| train.count / per_dom)
        .min()
        .unwrap_or(0);
    if steps_per_epoch == 0 {
        return Err(HarnessError::Config(format!(
            "not enough training sequences for {per_dom} per domain per batch"
        )));
    }

    let (use_rec, use_epoch, use_seq) = cfg.active_terms();
    let mut model = StagingModel::<f32>::new(&cfg.model, subseed(cfg.seed, 1));
    let updatable = model.trainable_indices(use_rec);
    let mut adam = AdamState::new(cfg.optim.adam());
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, 2));

    let l = cfg.model.seq_len;
    let d_model = cfg.model.feature_dim;
    let seq_elems = cfg.model.seq_len * cfg.model.samples_per_epoch * cfg.model.channels;
    let bank_rows = per_dom * l;

    let mut steps = Vec::with_capacity(cfg.epochs * steps_per_epoch);
    let mut val_acc = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ParamSet<f32>)> = None;
    let mut global_step = 0;

    for _epoch in 0..cfg.epochs {
        // fresh balanced order per domain
        let orders: Vec<Vec<usize>> = splits
            .iter()
            .map(|(train, _)| {
                let mut idx: Vec<usize> = (0..train.count).collect();
                idx.shuffle(&mut rng);
                idx
            })
            .collect();

        for step in 0..steps_per_epoch {
            let mut batch = Vec::with_capacity(cfg.batch_size * seq_elems);
            let mut onehot = vec![0.0f32; cfg.batch_size * l * NUM_CLASSES];
            for (dom, (train, _)) in splits.iter().enumerate() {
                for slot in 0..per_dom {
                    let seq_idx = orders[dom][step * per_dom + slot];
                    batch.extend_from_slice(train.sequence(seq_idx));
                    let row = dom * per_dom + slot;
                    for (k, &lab) in train.sequence_labels(seq_idx).iter().enumerate() {
                        onehot[(row * l + k) * NUM_CLASSES + lab as usize] = 1.0;
                    }
                }
            }
            let batch = Tensor::new(
                vec![
                    cfg.batch_size,
                    l,
                    cfg.model.samples_per_epoch,
                    cfg.model.channels,
                ],
                batch,
            );
            let labels = Tensor::new(vec![cfg.batch_size, l, NUM_CLASSES], onehot);

            let tape = Tape::new();
            let bound = model.bind(&tape);
            let xv = tape.constant(&batch);
            let mut mode = Mode::Train { rng: &mut rng };
            let h = bound.encode(xv, &mut mode);
            let probs = bound.classify(h);
            let cls = losses::classification_loss(probs, &labels)?;

            let rec = if use_rec {
                let xhat = bound.decode(h, &mut mode);
                Some(losses::reconstruction_loss(xv, xhat))
            } else {
                None
            };
            let epoch_term = if use_epoch {
                let banks: Vec<_> = (0..m)
                    .map(|dom| {
                        h.slice(0, dom * per_dom, (dom + 1) * per_dom)
                            .reshape(&[bank_rows, d_model])
                    })
                    .collect();
                Some(losses::epoch_level_loss(&banks, cfg.pair_mode)?)
            } else {
                None
            };
            let seq_term = if use_seq {
                let rs: Vec<_> = (0..m)
                    .map(|dom| {
                        losses::domain_correlation(h.slice(0, dom * per_dom, (dom + 1) * per_dom))
                    })
                    .collect::<Result<_, _>>()?;
                Some(losses::sequence_level_loss(&rs, cfg.pair_mode)?)
            } else {
                None
            };

            let total = losses::total_loss(cls, rec, epoch_term, seq_term, &cfg.weights).map_err(
                |e| match e {
                    losses::LossError::NonFinite { term, value } => HarnessError::NonFiniteLoss {
                        step: global_step,
                        details: format!("{term} = {value}"),
                    },
                    other => other.into(),
                },
            )?;

            let grads = tape.backward(total);
            let grad_list: Vec<Tensor<f32>> =
                updatable.iter().map(|&i| grads.get(bound.var(i))).collect();
            adam.step(model.params_mut(), &updatable, &grad_list);

            steps.push(StepTrace {
                step: global_step,
                classify: cls.scalar_value() as f64,
                reconstruction: rec.map(|v| v.scalar_value() as f64),
                epoch_align: epoch_term.map(|v| v.scalar_value() as f64),
                sequence_align: seq_term.map(|v| v.scalar_value() as f64),
                total: total.scalar_value() as f64,
            });
            global_step += 1;
        }

        // pooled source-validation accuracy
        let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
        for (_, val) in &splits {
            accumulate_confusion(&model, val, &mut confusion)?;
        }
        let acc = MetricsReport::from_confusion(confusion).acc;
        val_acc.push(acc);
        let improved = match &best {
            Some((best_acc, _, _)) => acc > *best_acc,
            None => true,
        };
        if improved {
            best = Some((acc, val_acc.len() - 1, model.params().clone()));
        }
    }

    let (best_val_acc, best_epoch, best_params) = best.expect("at least one epoch");
    model.set_params(best_params);
    Ok(TrainOutcome {
        model,
        report: TrainReport {
            steps,
            val_acc,
            best_epoch,
            best_val_acc,
        },
    })
}
