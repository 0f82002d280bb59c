//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own stream, derived from the
//! run seed, a purpose tag and an index:
//!
//! ```text
//! key  = SHA-256( "recon-rng-v1" || seed as u64 LE || len(tag) as u64 LE || tag || index as u64 LE )
//! rng  = ChaCha8 seeded with the 32-byte key
//! ```
//!
//! Streams never share state, so adding a consumer cannot perturb another
//! consumer's draws, and the derivation is reproducible in any language with
//! SHA-256 and ChaCha8.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, tag: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(b"recon-rng-v1");
    hasher.update(seed.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, e.g. one per corpus case.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, tag, index).next_u64()
}
