//! Seed derivation for reproducible sub-streams.
//!
//! Every random draw in the pipeline comes from a `ChaCha8Rng` seeded by a
//! value derived here, so a run is a pure function of its master seed. The
//! mixing function is fixed (splitmix64 over FNV-hashed tags) and does not
//! depend on `std::hash`, which is not stable across releases.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte string.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a master seed, a purpose tag and an index.
///
/// Distinct (tag, index) pairs give statistically independent streams.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(tag.as_bytes()) ^ splitmix64(index)))
}

/// RNG for a derived stream.
pub fn stream_rng(master: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index))
}

/// RNG seeded directly with `seed`.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
