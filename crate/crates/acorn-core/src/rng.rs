//! Seeded RNG sub-streams.
//!
//! Every random decision in a run draws from a named stream derived from the
//! run seed, so that two configurations sharing a seed see identical
//! randomness in every component they have in common. ChaCha8 is used
//! because its output is stable across platforms and library versions, which
//! the byte-identical-rerun guarantee depends on.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the stream name. Hand-rolled so the mapping never changes
/// under us (std's hashers are not stable across releases).
fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive the seed for a named sub-stream.
pub fn stream_seed(seed: u64, name: &str) -> u64 {
    splitmix64(seed ^ fnv1a(name))
}

/// RNG for a named sub-stream of `seed`.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, name))
}

/// Seed for the `index`-th member of a named sub-stream family.
pub fn indexed_seed(seed: u64, name: &str, index: u64) -> u64 {
    splitmix64(stream_seed(seed, name) ^ index)
}

/// RNG for the `index`-th member of a named sub-stream family
/// (per-task splits, per-k elbow fits, ...).
pub fn stream_indexed(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(indexed_seed(seed, name, index))
}

/// One standard-normal draw via Box-Muller. The cosine branch only; keeping
/// a single draw per call makes stream consumption easy to reason about.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
