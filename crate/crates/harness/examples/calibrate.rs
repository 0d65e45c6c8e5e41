//! Desk-scale calibration: one fold per arm, timing + accuracy.
use sleepalign_harness::*;
use sleepalign_synth::{make_benchmark, BenchmarkConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let heldout: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);

    let t0 = Instant::now();
    let bench = BenchmarkConfig { base_seed: seed, ..BenchmarkConfig::default() };
    let domains = make_benchmark(&bench).unwrap();
    println!("generation: {:.1} s", t0.elapsed().as_secs_f64());

    for arm in [Arm::Base, Arm::AeEa, Arm::AeSa, Arm::Full] {
        let cfg = ExperimentConfig {
            arm,
            epochs,
            seed,
            heldout: Some(heldout),
            ..ExperimentConfig::desk()
        };
        let sources: Vec<_> = domains
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != heldout)
            .map(|(_, d)| d.clone())
            .collect();
        let t = Instant::now();
        let out = train(&cfg, &sources).unwrap();
        let train_s = t.elapsed().as_secs_f64();
        let m = evaluate(&out.model, &domains[heldout]).unwrap();
        println!(
            "{:>6}: acc {:.4} mf1 {:.4} best_epoch {:>2} val {:.4} | train {:.1} s ({:.0} ms/step)",
            arm.to_string(), m.acc, m.mf1, out.report.best_epoch, out.report.best_val_acc,
            train_s, train_s * 1000.0 / out.report.steps.len() as f64
        );
    }
}
