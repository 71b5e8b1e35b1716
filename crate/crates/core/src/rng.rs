//! Seed streams.
//!
//! A [`SeedStream`] is a 64-bit key that can be split into child keys by
//! index. Every random draw in the crate goes through a generator built from
//! one of these keys, so the value a worker sees depends only on its position
//! in the key tree and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every simulated draw.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { key: mix(seed) }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child stream number `index`. Distinct indices give unrelated keys.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            key: mix(self.key ^ mix(index.wrapping_add(0xD1B5_4A32_D192_ED03))),
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&mix(self.key.wrapping_add(i as u64)).to_le_bytes());
        }
        StreamRng::from_seed(seed)
    }
}
