//! Single-file tensor container: magic, a length-prefixed JSON header naming
//! every tensor and its shape, then raw little-endian `f32` data in header
//! order.

use std::path::Path;

use deep_sesr_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DSESRTNS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header<M> {
    meta: M,
    tensors: Vec<TensorEntry>,
}

pub fn encode<M: Serialize>(meta: &M, tensors: &[(String, Tensor<f32>)]) -> Vec<u8> {
    let header = Header {
        meta,
        tensors: tensors
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.clone(),
                shape: t.shape(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let payload: usize = tensors.iter().map(|(_, t)| 4 * t.len()).sum();
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + json.len() + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode<M: for<'de> Deserialize<'de>>(bytes: &[u8], path: &Path) -> Result<(M, Vec<(String, Tensor<f32>)>)> {
    let bad = |m: &str| Error::invalid(path, m.to_string());
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a tensor container (bad magic)"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() < len {
        return Err(bad("truncated header"));
    }
    let header: Header<M> = serde_json::from_slice(&body[..len]).map_err(|e| bad(&format!("header: {e}")))?;
    let mut data = &body[len..];
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in header.tensors {
        let n: usize = entry.shape.iter().product();
        if data.len() < 4 * n {
            return Err(bad(&format!("truncated data for tensor `{}`", entry.name)));
        }
        let values = data[..4 * n]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        data = &data[4 * n..];
        tensors.push((entry.name, Tensor::from_vec(entry.shape, values)?));
    }
    if !data.is_empty() {
        return Err(bad("trailing bytes after tensor data"));
    }
    Ok((header.meta, tensors))
}

pub fn read_file<M: for<'de> Deserialize<'de>>(path: &Path) -> Result<(M, Vec<(String, Tensor<f32>)>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn write_file<M: Serialize>(path: &Path, meta: &M, tensors: &[(String, Tensor<f32>)]) -> Result<()> {
    std::fs::write(path, encode(meta, tensors)).map_err(|e| Error::io(path, e))
}
