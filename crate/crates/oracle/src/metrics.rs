//! Confusion-matrix bookkeeping done the long way.

/// Confusion counts: `out[truth * classes + pred]`.
pub fn confusion(truth: &[usize], pred: &[usize], classes: usize) -> Vec<u64> {
    assert_eq!(truth.len(), pred.len());
    let mut m = vec![0u64; classes * classes];
    for (&t, &p) in truth.iter().zip(pred.iter()) {
        m[t * classes + p] += 1;
    }
    m
}

pub fn accuracy(conf: &[u64], classes: usize) -> f64 {
    let total: u64 = conf.iter().sum();
    let correct: u64 = (0..classes).map(|c| conf[c * classes + c]).sum();
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Per-class F1; a class absent from both truth and prediction scores 0.
pub fn per_class_f1(conf: &[u64], classes: usize) -> Vec<f64> {
    let mut out = vec![0.0; classes];
    for c in 0..classes {
        let tp = conf[c * classes + c] as f64;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for o in 0..classes {
            if o != c {
                fp += conf[o * classes + c] as f64;
                fn_ += conf[c * classes + o] as f64;
            }
        }
        let denom = 2.0 * tp + fp + fn_;
        out[c] = if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    out
}

pub fn macro_f1(conf: &[u64], classes: usize) -> f64 {
    per_class_f1(conf, classes).iter().sum::<f64>() / classes as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_single_class_prediction() {
        // Balanced 5-class truth, everything predicted as class 0.
        let truth: Vec<usize> = (0..25).map(|i| i % 5).collect();
        let pred = vec![0usize; 25];
        let conf = confusion(&truth, &pred, 5);
        assert!((accuracy(&conf, 5) - 0.2).abs() < 1e-15);
        assert!((macro_f1(&conf, 5) - 1.0 / 15.0).abs() < 1e-15);
    }
}
