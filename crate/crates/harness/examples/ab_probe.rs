//! Quick arm comparison at adjustable batch/epochs.
use sleepalign_harness::*;
use sleepalign_synth::{make_benchmark, BenchmarkConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let batch: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(15);
    let heldout: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1);
    let bench = BenchmarkConfig { base_seed: seed, ..BenchmarkConfig::default() };
    let domains = make_benchmark(&bench).unwrap();
    for arm in [Arm::Base, Arm::AeEa, Arm::AeSa, Arm::Full] {
        let cfg = ExperimentConfig {
            arm, epochs, seed, batch_size: batch, heldout: Some(heldout),
            ..ExperimentConfig::desk()
        };
        let sources: Vec<_> = domains.iter().enumerate()
            .filter(|(i, _)| *i != heldout).map(|(_, d)| d.clone()).collect();
        let t = std::time::Instant::now();
        let out = train(&cfg, &sources).unwrap();
        let m = evaluate(&out.model, &domains[heldout]).unwrap();
        println!("{:>6}: acc {:.4} val {:.4} ({:.0} s)", arm.to_string(), m.acc, out.report.best_val_acc, t.elapsed().as_secs_f64());
    }
}
