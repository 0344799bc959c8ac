//! Seed derivation. Every random stream in a run is derived from one master
//! seed plus a stream label, so runs are reproducible and independent
//! streams never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a stream label.
pub fn derive(parent: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derives a seed from a parent and a textual stream name.
pub fn derive_named(parent: u64, name: &str) -> u64 {
    // FNV-1a
    let h = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    derive(parent, h)
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
