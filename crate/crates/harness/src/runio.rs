//! Run-directory output files: JSON reports and UTF-8 CSVs with headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::export::FeatureExport;
use crate::loo::AblationReport;
use crate::train::TrainReport;
use crate::HarnessError;

/// Serialize as pretty JSON with a trailing newline (byte-stable for a given
/// value).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-step loss trace: `step,classify,reconstruction,epoch,sequence,total`.
pub fn write_losses_csv(path: &Path, report: &TrainReport) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "step,classify,reconstruction,epoch,sequence,total")?;
    for s in &report.steps {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.step,
            s.classify,
            fmt_opt(s.reconstruction),
            fmt_opt(s.epoch_align),
            fmt_opt(s.sequence_align),
            s.total
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Arm x fold grid with per-cell seeds plus mean/std summary rows
/// (`heldout=avg` rows aggregate the five folds).
pub fn write_ablation_csv(path: &Path, report: &AblationReport) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "kind,arm,heldout,seed,acc,mf1,acc_std,mf1_std")?;
    for c in &report.cells {
        writeln!(
            w,
            "cell,{},{},{},{},{},,",
            c.arm, c.heldout, c.seed, c.acc, c.mf1
        )?;
    }
    for s in &report.summary {
        let heldout = s
            .heldout
            .map(|h| h.to_string())
            .unwrap_or_else(|| "avg".into());
        writeln!(
            w,
            "summary,{},{},,{},{},{},{}",
            s.arm, heldout, s.acc_mean, s.mf1_mean, s.acc_std, s.mf1_std
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Per-epoch feature rows: `domain,stage,pc1,f0..f{d-1}`.
pub fn write_features_csv(path: &Path, export: &FeatureExport) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "domain,stage,pc1")?;
    for j in 0..export.feature_dim {
        write!(w, ",f{j}")?;
    }
    writeln!(w)?;
    for r in 0..export.domains.len() {
        write!(w, "{},{},{}", export.domains[r], export.stages[r], export.pc1[r])?;
        for j in 0..export.feature_dim {
            write!(w, ",{}", export.features[r * export.feature_dim + j])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
