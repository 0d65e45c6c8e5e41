//! Inspect loss term magnitudes over training for one FULL-arm fold.
use sleepalign_harness::*;
use sleepalign_synth::{make_benchmark, BenchmarkConfig};

fn main() {
    let bench = BenchmarkConfig { base_seed: 1, ..BenchmarkConfig::default() };
    let domains = make_benchmark(&bench).unwrap();
    let cfg = ExperimentConfig {
        arm: Arm::Full,
        epochs: 10,
        seed: 1,
        heldout: Some(0),
        ..ExperimentConfig::desk()
    };
    let sources: Vec<_> = domains.iter().skip(1).cloned().collect();
    let out = train(&cfg, &sources).unwrap();
    for s in out.report.steps.iter().step_by(10) {
        println!(
            "step {:>4}: cls {:>8.4} rec {:>9.4} epoch {:>9.3} seq {:>8.4} total {:>9.3}",
            s.step, s.classify,
            s.reconstruction.unwrap_or(f64::NAN),
            s.epoch_align.unwrap_or(f64::NAN),
            s.sequence_align.unwrap_or(f64::NAN),
            s.total
        );
    }
    println!("val: {:?}", out.report.val_acc.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
}
