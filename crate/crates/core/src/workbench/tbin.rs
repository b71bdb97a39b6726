//! TBIN: a minimal lossless tensor file.
//!
//! Layout (all little-endian): magic `TBN1`, `u32` order `N`, `N` × `u32`
//! extents, then `Π extents` × `f64` values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"TBN1";

pub fn encode_tbin(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.order() + 8 * t.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(t.order() as u32).to_le_bytes());
    for &d in t.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::MalformedHeader(format!("file ends before {what}")))
}

pub fn decode_tbin(bytes: &[u8]) -> Result<DenseTensor> {
    let magic: [u8; 4] = bytes
        .get(..4)
        .ok_or_else(|| Error::MalformedHeader("file shorter than the magic".into()))?
        .try_into()
        .expect("4 bytes");
    if &magic != MAGIC {
        return Err(Error::BadMagic { found: magic });
    }
    let order = read_u32(bytes, 4, "the order field")? as usize;
    if order == 0 {
        return Err(Error::MalformedHeader("order 0".into()));
    }
    let mut dims = Vec::with_capacity(order);
    for n in 0..order {
        let d = read_u32(bytes, 8 + 4 * n, &format!("extent {n}"))? as usize;
        if d == 0 {
            return Err(Error::MalformedHeader(format!("extent {n} is 0")));
        }
        dims.push(d);
    }
    let expected = dims
        .iter()
        .try_fold(8usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::MalformedHeader(format!("dims {dims:?} overflow")))?;
    let payload = &bytes[8 + 4 * order..];
    if payload.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseTensor::new(dims, data)
}

pub fn write_tbin(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tbin(t)).map_err(|e| Error::io(path, e))
}

pub fn read_tbin(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tbin(&bytes)
}
