//! Evaluation: per-epoch argmax predictions, confusion matrix, accuracy and
//! macro F1.

use serde::{Deserialize, Serialize};
use sleepalign_autodiff::{Tape, Tensor};
use sleepalign_model::{Mode, StagingModel};
use sleepalign_synth::DomainDataset;

use crate::HarnessError;

pub const NUM_CLASSES: usize = 5;

/// Evaluation batch size; per-sequence results are independent of the
/// chunking, this only bounds memory.
const EVAL_BATCH: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub mf1: f64,
    pub per_class_f1: [f64; NUM_CLASSES],
    /// Counts, rows = truth, cols = prediction.
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
    pub epochs_evaluated: u64,
}

impl MetricsReport {
    pub fn from_confusion(confusion: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        let total: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
        let acc = if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        };
        let mut per_class_f1 = [0.0; NUM_CLASSES];
        for c in 0..NUM_CLASSES {
            let tp = confusion[c][c] as f64;
            let mut fp = 0.0;
            let mut fn_ = 0.0;
            for o in 0..NUM_CLASSES {
                if o != c {
                    fp += confusion[o][c] as f64;
                    fn_ += confusion[c][o] as f64;
                }
            }
            let denom = 2.0 * tp + fp + fn_;
            // a class absent from truth and prediction scores 0
            per_class_f1[c] = if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
        }
        let mf1 = per_class_f1.iter().sum::<f64>() / NUM_CLASSES as f64;
        MetricsReport {
            acc,
            mf1,
            per_class_f1,
            confusion,
            epochs_evaluated: total,
        }
    }
}

/// Predict stages for every sequence of `dataset` (eval mode) and score.
pub fn evaluate(
    model: &StagingModel<f32>,
    dataset: &DomainDataset,
) -> Result<MetricsReport, HarnessError> {
    if dataset.count == 0 {
        return Err(HarnessError::EmptyDataset);
    }
    let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    accumulate_confusion(model, dataset, &mut confusion)?;
    Ok(MetricsReport::from_confusion(confusion))
}

/// Run predictions and add to a shared confusion matrix (used by pooled
/// validation scoring).
pub(crate) fn accumulate_confusion(
    model: &StagingModel<f32>,
    dataset: &DomainDataset,
    confusion: &mut [[u64; NUM_CLASSES]; NUM_CLASSES],
) -> Result<(), HarnessError> {
    let spec = &dataset.spec;
    let l = spec.seq_len;
    let seq_elems = dataset.seq_elems();
    let mut start = 0;
    while start < dataset.count {
        let stop = (start + EVAL_BATCH).min(dataset.count);
        let b = stop - start;
        let batch = Tensor::new(
            vec![b, l, spec.samples_per_epoch, spec.channels],
            dataset.signals[start * seq_elems..stop * seq_elems].to_vec(),
        );
        let tape = Tape::new();
        let bound = model.bind(&tape);
        let h = bound.encode(tape.constant(&batch), &mut Mode::Eval);
        let probs = bound.classify(h).value();
        for s in 0..b {
            for k in 0..l {
                let row = &probs.data()[(s * l + k) * NUM_CLASSES..(s * l + k + 1) * NUM_CLASSES];
                let mut pred = 0;
                for c in 1..NUM_CLASSES {
                    if row[c] > row[pred] {
                        pred = c;
                    }
                }
                let truth = dataset.labels[(start + s) * l + k] as usize;
                confusion[truth][pred] += 1;
            }
        }
        start = stop;
    }
    Ok(())
}
