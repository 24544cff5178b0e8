//! Seed derivation for independent, reproducible random streams.
//!
//! Every parallel unit of work (a trial, a run, a restart) gets its own
//! generator seeded with `master ^ mix(index)`, so its output is the same
//! whether units execute serially or on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type EpRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    master ^ mix(index)
}

/// Seed for a named sub-purpose, keeping e.g. split and subsample streams
/// apart even when they share a master seed and index.
pub fn domain_seed(master: u64, domain: &str) -> u64 {
    let tag = domain.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01B3)
    });
    master ^ mix(tag)
}

pub fn stream(master: u64, index: u64) -> EpRng {
    EpRng::seed_from_u64(derive_seed(master, index))
}

pub fn from_seed(seed: u64) -> EpRng {
    EpRng::seed_from_u64(seed)
}
