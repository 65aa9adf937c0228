//! Labeled, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// `ChaCha8` stream keyed by `SHA-256(master ‖ label ‖ index)`.
pub fn derived_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let seed: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(seed)
}
