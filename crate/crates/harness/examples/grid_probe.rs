//! Reduced ablation grid: all folds, selectable seeds.
use sleepalign_harness::*;
use sleepalign_synth::{make_benchmark, BenchmarkConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: Vec<u64> = args.get(1).map(|s| s.split(',').map(|v| v.parse().unwrap()).collect()).unwrap_or(vec![1]);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30);
    let t0 = std::time::Instant::now();
    let arms = [Arm::Base, Arm::AeEa, Arm::AeSa, Arm::Full];
    let mut table: Vec<(Arm, f64)> = Vec::new();
    for &arm in &arms {
        let mut seed_avgs = Vec::new();
        for &seed in &seeds {
            let bench = BenchmarkConfig { base_seed: seed, ..BenchmarkConfig::default() };
            let domains = make_benchmark(&bench).unwrap();
            let mut accs = Vec::new();
            for heldout in 0..5 {
                let cfg = ExperimentConfig {
                    arm, epochs, seed, heldout: Some(heldout),
                    ..ExperimentConfig::desk()
                };
                let sources: Vec<_> = domains.iter().enumerate()
                    .filter(|(i, _)| *i != heldout).map(|(_, d)| d.clone()).collect();
                let out = train(&cfg, &sources).unwrap();
                let m = evaluate(&out.model, &domains[heldout]).unwrap();
                accs.push(m.acc);
            }
            let avg = accs.iter().sum::<f64>() / 5.0;
            println!("{:>6} seed {}: folds {:?} avg {:.4}", arm.to_string(), seed,
                accs.iter().map(|a| (a * 1000.0).round() / 10.0).collect::<Vec<_>>(), avg);
            seed_avgs.push(avg);
        }
        let mean = seed_avgs.iter().sum::<f64>() / seed_avgs.len() as f64;
        table.push((arm, mean));
    }
    println!("\n=== seed-averaged LOO ACC ===");
    for (arm, acc) in &table {
        println!("{:>6}: {:.2}", arm.to_string(), acc * 100.0);
    }
    println!("elapsed: {:.1} min", t0.elapsed().as_secs_f64() / 60.0);
}
