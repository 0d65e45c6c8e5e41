//! Parameter checkpoint format: one JSON header line (names, shapes,
//! precision) followed by the raw little-endian payloads concatenated in
//! header order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ParamSet;
use crate::real::Real;
use crate::tensor::{numel, Tensor};

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint precision is {found}, expected {expected}")]
    PrecisionMismatch { expected: String, found: String },
    #[error("checkpoint payload truncated: wanted {wanted} bytes for {name}")]
    Truncated { name: String, wanted: usize },
}

#[derive(Serialize, Deserialize)]
struct Header {
    precision: String,
    tensors: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
}

pub fn save<T: Real>(path: &Path, params: &ParamSet<T>) -> Result<(), CheckpointError> {
    let header = Header {
        precision: T::PRECISION.as_str().to_string(),
        tensors: params
            .iter()
            .map(|(name, t)| Entry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (_, t) in params.iter() {
        for v in t.data() {
            w.write_all(&v.to_le_bytes_vec())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load<T: Real>(path: &Path) -> Result<ParamSet<T>, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: Header = serde_json::from_slice(&header_bytes)?;
    if header.precision != T::PRECISION.as_str() {
        return Err(CheckpointError::PrecisionMismatch {
            expected: T::PRECISION.as_str().to_string(),
            found: header.precision,
        });
    }
    let mut names = Vec::with_capacity(header.tensors.len());
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in header.tensors {
        let count = numel(&entry.shape);
        let mut buf = vec![0u8; count * T::BYTES];
        r.read_exact(&mut buf).map_err(|_| CheckpointError::Truncated {
            name: entry.name.clone(),
            wanted: count * T::BYTES,
        })?;
        let data: Vec<T> = buf
            .chunks_exact(T::BYTES)
            .map(|c| T::from_le_slice(c))
            .collect();
        names.push(entry.name);
        tensors.push(Tensor::new(entry.shape, data));
    }
    Ok(ParamSet::from_parts(names, tensors))
}
