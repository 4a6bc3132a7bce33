//! Seeded, counter-addressable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by
//! `(seed, domain, index)`. A shard that owns index `k` can regenerate its
//! numbers without touching any other shard, so serial and sharded runs
//! produce the same bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates independent uses of the same user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Intensity = 1,
    Clicks = 2,
    Sampling = 3,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
