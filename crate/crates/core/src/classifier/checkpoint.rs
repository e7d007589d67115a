//! `AFBM` model checkpoints: magic, version, layer dimensions as u32 LE, then
//! every tensor as f32 LE in declared order.

use std::io::{Read, Write};

use super::model::{Architecture, SmallNet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const AFBM_MAGIC: &[u8; 4] = b"AFBM";
pub const AFBM_VERSION: u32 = 1;

/// Dimensions written after the version: conv1 (out, in, kh, kw),
/// conv2 (out, in, kh, kw), fc (out, in).
fn layer_dims(a: &Architecture) -> [u32; 10] {
    let (c1, c2, k) = (a.conv1_channels as u32, a.conv2_channels as u32, a.n_classes as u32);
    [c1, 1, 3, 3, c2, c1, 3, 3, k, c2]
}

pub fn write_checkpoint<T: Scalar, W: Write>(model: &SmallNet<T>, mut out: W) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(48 + 4 * model.n_parameters());
    buf.extend_from_slice(AFBM_MAGIC);
    buf.extend_from_slice(&AFBM_VERSION.to_le_bytes());
    for d in layer_dims(&model.arch) {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for t in model.tensors() {
        for v in t {
            buf.extend_from_slice(&v.to_f32_lossy().to_le_bytes());
        }
    }
    out.write_all(&buf)
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut input: R) -> Result<SmallNet<T>> {
    let bad = |m: String| Error::Parse {
        path: "<afbm>".into(),
        message: m,
    };
    let mut header = [0u8; 48];
    input
        .read_exact(&mut header)
        .map_err(|e| bad(format!("truncated header: {e}")))?;
    if &header[0..4] != AFBM_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    if word(0) != AFBM_VERSION {
        return Err(bad(format!("unsupported version {}", word(0))));
    }
    let dims: Vec<u32> = (1..11).map(word).collect();
    let arch = Architecture {
        conv1_channels: dims[0] as usize,
        conv2_channels: dims[4] as usize,
        n_classes: dims[8] as usize,
    };
    if dims[..] != layer_dims(&arch)[..] {
        return Err(bad(format!("inconsistent layer dimensions {dims:?}")));
    }
    let mut model = SmallNet::<T>::zeros(arch);
    for t in model.tensors_mut() {
        let mut raw = vec![0u8; 4 * t.len()];
        input
            .read_exact(&mut raw)
            .map_err(|e| bad(format!("truncated parameters: {e}")))?;
        for (v, b) in t.iter_mut().zip(raw.chunks_exact(4)) {
            *v = T::lit(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
        }
    }
    Ok(model)
}
