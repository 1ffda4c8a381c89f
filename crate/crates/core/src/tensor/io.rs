//! QVDT v1 tensor files.
//!
//! Little-endian layout:
//!
//! ```text
//! "QVDT" | u32 version | u8 rank | u8 has_channel_axis | u8 channel_axis | u8 pad
//! rank x u32 dims | prod(dims) x f32 payload (row-major)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{QvdError, Result};

use super::{Tensor, MAX_RANK};

pub const QVDT_MAGIC: [u8; 4] = *b"QVDT";
pub const QVDT_VERSION: u32 = 1;

const FIXED_HEADER: usize = 12;

pub fn encode_tensor(x: &Tensor) -> Vec<u8> {
    let rank = x.rank();
    let mut buf = Vec::with_capacity(FIXED_HEADER + 4 * rank + 4 * x.len());
    buf.extend_from_slice(&QVDT_MAGIC);
    buf.extend_from_slice(&QVDT_VERSION.to_le_bytes());
    buf.push(rank as u8);
    match x.channel_axis() {
        Some(axis) => {
            buf.push(1);
            buf.push(axis as u8);
        }
        None => {
            buf.push(0);
            buf.push(0);
        }
    }
    buf.push(0);
    for &d in x.shape() {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in x.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < FIXED_HEADER {
        return Err(QvdError::format(
            bytes.len() as u64,
            format!("truncated header: {} bytes", bytes.len()),
        ));
    }
    if bytes[0..4] != QVDT_MAGIC {
        return Err(QvdError::format(0, "bad magic, expected \"QVDT\""));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != QVDT_VERSION {
        return Err(QvdError::format(4, format!("unsupported version {version}")));
    }
    let rank = bytes[8] as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(QvdError::format(8, format!("rank {rank} outside 1..={MAX_RANK}")));
    }
    let channel_axis = match bytes[9] {
        0 => None,
        1 => Some(bytes[10] as usize),
        flag => return Err(QvdError::format(9, format!("bad channel-axis flag {flag}"))),
    };
    let dims_end = FIXED_HEADER + 4 * rank;
    if bytes.len() < dims_end {
        return Err(QvdError::format(
            bytes.len() as u64,
            "truncated dimension table",
        ));
    }
    let mut shape = Vec::with_capacity(rank);
    let mut count: u64 = 1;
    for (i, chunk) in bytes[FIXED_HEADER..dims_end].chunks_exact(4).enumerate() {
        let d = u32::from_le_bytes(chunk.try_into().unwrap());
        if d == 0 {
            return Err(QvdError::format(
                (FIXED_HEADER + 4 * i) as u64,
                "zero-sized dimension",
            ));
        }
        count = count.saturating_mul(d as u64);
        shape.push(d as usize);
    }
    let payload = &bytes[dims_end..];
    if payload.len() as u64 != count.saturating_mul(4) {
        return Err(QvdError::format(
            dims_end as u64,
            format!(
                "payload holds {} bytes but dims {shape:?} need {}",
                payload.len(),
                count.saturating_mul(4)
            ),
        ));
    }
    let mut data = Vec::with_capacity(count as usize);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(QvdError::format(
                (dims_end + 4 * i) as u64,
                "non-finite value in payload",
            ));
        }
        data.push(v);
    }
    let tensor = Tensor::new(shape, data).map_err(|e| QvdError::format(0, e.to_string()))?;
    match channel_axis {
        Some(axis) => tensor
            .with_channel_axis(axis)
            .map_err(|e| QvdError::format(10, e.to_string())),
        None => Ok(tensor),
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    decode_tensor(&fs::read(path)?)
}

/// Writes atomically: the bytes land in a sibling temp file that is then
/// renamed over `path`.
pub fn write_tensor(x: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    crate::fsutil::write_atomic(path.as_ref(), &encode_tensor(x))
}
