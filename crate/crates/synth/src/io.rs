//! On-disk dataset format: one file per domain. Line 1 is a JSON header
//! (domain id, shapes, spec, byte order, dtype); then the raw little-endian
//! f32 signal payload; then the labels as u8. Round-trips bit-exactly.
//!
//! Normalization statistics are not persisted; readers get unit stats.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DomainDataset, NormStats};
use crate::spec::DomainSpec;
use crate::SynthError;

#[derive(Serialize, Deserialize)]
struct FileHeader {
    domain: usize,
    shape: [usize; 4],
    label_shape: [usize; 2],
    spec: DomainSpec,
    byte_order: String,
    dtype: String,
}

pub fn write_domain(path: &Path, dataset: &DomainDataset) -> Result<(), SynthError> {
    let spec = &dataset.spec;
    let header = FileHeader {
        domain: spec.id,
        shape: [
            dataset.count,
            spec.seq_len,
            spec.samples_per_epoch,
            spec.channels,
        ],
        label_shape: [dataset.count, spec.seq_len],
        spec: spec.clone(),
        byte_order: "little".into(),
        dtype: "f32".into(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for v in &dataset.signals {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&dataset.labels)?;
    w.flush()?;
    Ok(())
}

pub fn read_domain(path: &Path) -> Result<DomainDataset, SynthError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)
            .map_err(|_| SynthError::Malformed("missing header line".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: FileHeader = serde_json::from_slice(&header_bytes)?;
    if header.byte_order != "little" {
        return Err(SynthError::Malformed(format!(
            "unsupported byte order {}",
            header.byte_order
        )));
    }
    if header.dtype != "f32" {
        return Err(SynthError::Malformed(format!("unsupported dtype {}", header.dtype)));
    }
    let [count, l, n, c] = header.shape;
    let spec = header.spec;
    if header.domain != spec.id
        || l != spec.seq_len
        || n != spec.samples_per_epoch
        || c != spec.channels
        || header.label_shape != [count, l]
    {
        return Err(SynthError::Malformed(
            "header shape disagrees with embedded spec".into(),
        ));
    }
    let signal_count = count * l * n * c;
    let mut payload = vec![0u8; signal_count * 4];
    r.read_exact(&mut payload)
        .map_err(|_| SynthError::Malformed("signal payload truncated".into()))?;
    let signals: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let mut labels = vec![0u8; count * l];
    r.read_exact(&mut labels)
        .map_err(|_| SynthError::Malformed("label payload truncated".into()))?;
    let mut trailing = Vec::new();
    r.read_to_end(&mut trailing)?;
    if !trailing.is_empty() {
        return Err(SynthError::Malformed(format!(
            "{} unexpected trailing bytes",
            trailing.len()
        )));
    }
    for (i, &lab) in labels.iter().enumerate() {
        if lab as usize >= crate::spec::NUM_STAGES {
            return Err(SynthError::Malformed(format!(
                "label {lab} at position {i} out of range"
            )));
        }
    }
    let norm = vec![NormStats { mean: 0.0, std: 1.0 }; count * c];
    Ok(DomainDataset {
        spec,
        signals,
        labels,
        norm,
        count,
    })
}
