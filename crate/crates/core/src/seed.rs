//! Stable seed derivation and content digests.
//!
//! Seeds are derived by hashing, so a job's seed depends only on its
//! coordinates and never on scheduling order.

use sha2::{Digest, Sha256};

/// Derives a 64-bit seed from a base seed and a tuple of integer coordinates.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"afb-seed");
    hasher.update(base.to_le_bytes());
    for p in parts {
        hasher.update(p.to_le_bytes());
    }
    first_u64(&hasher.finalize())
}

/// Derives a seed from a base seed and a label, e.g. a word name.
pub fn derive_labeled(base: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"afb-seed-label");
    hasher.update(base.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    first_u64(&hasher.finalize())
}

fn first_u64(bytes: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&bytes[..8]);
    u64::from_le_bytes(buf)
}

/// Incremental SHA-256 digest rendered as lowercase hex.
#[derive(Default, Clone)]
pub struct Digester(Sha256);

impl Digester {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    pub fn f64(&mut self, x: f64) -> &mut Self {
        self.0.update(x.to_bits().to_le_bytes());
        self
    }

    pub fn u64(&mut self, x: u64) -> &mut Self {
        self.0.update(x.to_le_bytes());
        self
    }

    pub fn finish(&self) -> String {
        hex::encode(self.0.clone().finalize())
    }
}
