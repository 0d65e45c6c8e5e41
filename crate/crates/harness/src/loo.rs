//! Leave-one-domain-out folds and the ablation grid.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sleepalign_synth::{read_domain, DomainDataset};

use crate::metrics::{evaluate, MetricsReport};
use crate::train::{train, TrainOutcome};
use crate::{Arm, ExperimentConfig, HarnessError};

pub const NUM_DOMAINS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub heldout: usize,
    pub metrics: MetricsReport,
    pub best_epoch: usize,
    pub best_val_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub arm: Arm,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub avg_acc: f64,
    pub avg_mf1: f64,
}

fn check_five(domains: &[DomainDataset]) -> Result<(), HarnessError> {
    if domains.len() != NUM_DOMAINS {
        return Err(HarnessError::WrongDomainCount {
            expected: NUM_DOMAINS,
            got: domains.len(),
        });
    }
    for (i, a) in domains.iter().enumerate() {
        for b in &domains[i + 1..] {
            if a.spec.id == b.spec.id {
                return Err(HarnessError::DuplicateDomain { id: a.spec.id });
            }
        }
    }
    Ok(())
}

/// Train on four domains, evaluate on the held-out fifth; repeat per domain.
pub fn leave_one_out(
    cfg: &ExperimentConfig,
    domains: &[DomainDataset],
) -> Result<(LooReport, Vec<TrainOutcome>), HarnessError> {
    check_five(domains)?;
    let mut folds = Vec::with_capacity(NUM_DOMAINS);
    let mut outcomes = Vec::with_capacity(NUM_DOMAINS);
    for heldout in 0..NUM_DOMAINS {
        let sources: Vec<DomainDataset> = domains
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != heldout)
            .map(|(_, d)| d.clone())
            .collect();
        let fold_cfg = ExperimentConfig {
            heldout: Some(heldout),
            ..cfg.clone()
        };
        let outcome = train(&fold_cfg, &sources)?;
        let metrics = evaluate(&outcome.model, &domains[heldout])?;
        folds.push(FoldReport {
            heldout,
            metrics,
            best_epoch: outcome.report.best_epoch,
            best_val_acc: outcome.report.best_val_acc,
        });
        outcomes.push(outcome);
    }
    let avg_acc = folds.iter().map(|f| f.metrics.acc).sum::<f64>() / NUM_DOMAINS as f64;
    let avg_mf1 = folds.iter().map(|f| f.metrics.mf1).sum::<f64>() / NUM_DOMAINS as f64;
    Ok((
        LooReport {
            arm: cfg.arm,
            seed: cfg.seed,
            folds,
            avg_acc,
            avg_mf1,
        },
        outcomes,
    ))
}

/// One leave-one-out fold described by files. Training reads only the source
/// paths; the held-out file is opened strictly after training, so corrupting
/// it cannot influence the training phase.
#[derive(Clone, Debug)]
pub struct FoldPlan {
    pub heldout: usize,
    pub source_paths: Vec<PathBuf>,
    pub heldout_path: PathBuf,
}

/// Expect `domain_0.bin` .. `domain_4.bin` under `dir`.
pub fn plan_folds(dir: &Path) -> Result<Vec<FoldPlan>, HarnessError> {
    let paths: Vec<PathBuf> = (0..NUM_DOMAINS)
        .map(|k| dir.join(format!("domain_{k}.bin")))
        .collect();
    for p in &paths {
        if !p.is_file() {
            return Err(HarnessError::Config(format!(
                "missing domain file {}",
                p.display()
            )));
        }
    }
    Ok((0..NUM_DOMAINS)
        .map(|heldout| FoldPlan {
            heldout,
            source_paths: paths
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != heldout)
                .map(|(_, p)| p.clone())
                .collect(),
            heldout_path: paths[heldout].clone(),
        })
        .collect())
}

/// Training phase of one fold: loads sources only.
pub fn train_fold(cfg: &ExperimentConfig, plan: &FoldPlan) -> Result<TrainOutcome, HarnessError> {
    let sources: Vec<DomainDataset> = plan
        .source_paths
        .iter()
        .map(|p| read_domain(p))
        .collect::<Result<_, _>>()?;
    let fold_cfg = ExperimentConfig {
        heldout: Some(plan.heldout),
        ..cfg.clone()
    };
    train(&fold_cfg, &sources)
}

/// Evaluation phase of one fold: loads the held-out file.
pub fn evaluate_fold(
    outcome: &TrainOutcome,
    plan: &FoldPlan,
) -> Result<MetricsReport, HarnessError> {
    let heldout = read_domain(&plan.heldout_path)?;
    evaluate(&outcome.model, &heldout)
}

/// File-based leave-one-out over a data directory.
pub fn leave_one_out_dir(
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(LooReport, Vec<TrainOutcome>), HarnessError> {
    let plans = plan_folds(dir)?;
    let mut folds = Vec::with_capacity(plans.len());
    let mut outcomes = Vec::with_capacity(plans.len());
    for plan in &plans {
        let outcome = train_fold(cfg, plan)?;
        let metrics = evaluate_fold(&outcome, plan)?;
        folds.push(FoldReport {
            heldout: plan.heldout,
            metrics,
            best_epoch: outcome.report.best_epoch,
            best_val_acc: outcome.report.best_val_acc,
        });
        outcomes.push(outcome);
    }
    let avg_acc = folds.iter().map(|f| f.metrics.acc).sum::<f64>() / folds.len() as f64;
    let avg_mf1 = folds.iter().map(|f| f.metrics.mf1).sum::<f64>() / folds.len() as f64;
    Ok((
        LooReport {
            arm: cfg.arm,
            seed: cfg.seed,
            folds,
            avg_acc,
            avg_mf1,
        },
        outcomes,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub arm: Arm,
    pub heldout: usize,
    pub seed: u64,
    pub acc: f64,
    pub mf1: f64,
}

/// Mean and stddev over seeds; `heldout: None` rows hold the per-arm
/// fold average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: Arm,
    pub heldout: Option<usize>,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub mf1_mean: f64,
    pub mf1_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub cells: Vec<AblationCell>,
    pub summary: Vec<ArmSummary>,
}

impl AblationReport {
    /// Seed-averaged leave-one-out average accuracy for one arm.
    pub fn arm_avg_acc(&self, arm: Arm) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.arm == arm && s.heldout.is_none())
            .map(|s| s.acc_mean)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    };
    (mean, var.sqrt())
}

/// Full grid: every (arm, fold, seed) trains independently. `jobs` bounds
/// the worker threads; results merge deterministically in grid order.
pub fn run_ablation(
    cfg: &ExperimentConfig,
    domains: &[DomainDataset],
    arms: &[Arm],
    seeds: &[u64],
    jobs: usize,
) -> Result<AblationReport, HarnessError> {
    check_five(domains)?;
    if arms.is_empty() {
        return Err(HarnessError::Config("ablation needs at least one arm".into()));
    }
    if seeds.is_empty() {
        return Err(HarnessError::Config("ablation needs at least one seed".into()));
    }

    // job grid in deterministic order
    let mut grid = Vec::new();
    for &arm in arms {
        for heldout in 0..NUM_DOMAINS {
            for &seed in seeds {
                grid.push((arm, heldout, seed));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let cells: Result<Vec<AblationCell>, HarnessError> = pool.install(|| {
        grid.par_iter()
            .map(|&(arm, heldout, seed)| {
                let run_cfg = ExperimentConfig {
                    arm,
                    seed,
                    heldout: Some(heldout),
                    ..cfg.clone()
                };
                let sources: Vec<DomainDataset> = domains
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != heldout)
                    .map(|(_, d)| d.clone())
                    .collect();
                let outcome = train(&run_cfg, &sources)?;
                let metrics = evaluate(&outcome.model, &domains[heldout])?;
                Ok(AblationCell {
                    arm,
                    heldout,
                    seed,
                    acc: metrics.acc,
                    mf1: metrics.mf1,
                })
            })
            .collect()
    });
    let cells = cells?;

    let mut summary = Vec::new();
    for &arm in arms {
        for heldout in 0..NUM_DOMAINS {
            let accs: Vec<f64> = cells
                .iter()
                .filter(|c| c.arm == arm && c.heldout == heldout)
                .map(|c| c.acc)
                .collect();
            let mf1s: Vec<f64> = cells
                .iter()
                .filter(|c| c.arm == arm && c.heldout == heldout)
                .map(|c| c.mf1)
                .collect();
            let (acc_mean, acc_std) = mean_std(&accs);
            let (mf1_mean, mf1_std) = mean_std(&mf1s);
            summary.push(ArmSummary {
                arm,
                heldout: Some(heldout),
                acc_mean,
                acc_std,
                mf1_mean,
                mf1_std,
            });
        }
        // per-seed fold averages, then mean/std over seeds
        let per_seed_avg_acc: Vec<f64> = seeds
            .iter()
            .map(|&s| {
                let accs: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.arm == arm && c.seed == s)
                    .map(|c| c.acc)
                    .collect();
                accs.iter().sum::<f64>() / accs.len() as f64
            })
            .collect();
        let per_seed_avg_mf1: Vec<f64> = seeds
            .iter()
            .map(|&s| {
                let v: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.arm == arm && c.seed == s)
                    .map(|c| c.mf1)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect();
        let (acc_mean, acc_std) = mean_std(&per_seed_avg_acc);
        let (mf1_mean, mf1_std) = mean_std(&per_seed_avg_mf1);
        summary.push(ArmSummary {
            arm,
            heldout: None,
            acc_mean,
            acc_std,
            mf1_mean,
            mf1_std,
        });
    }
    Ok(AblationReport { cells, summary })
}
