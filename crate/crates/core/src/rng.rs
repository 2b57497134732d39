//! Seed derivation for reproducible, independent random streams.
//!
//! Every replication owns one base seed; each consumer (data generation,
//! every learner, tie breaking) derives its own stream from the base seed and
//! a stable label. Derivation does not depend on `std`'s hasher, so seeds are
//! stable across builds and platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derives a sub-stream seed from a parent seed and a label.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    mix64(parent ^ mix64(fnv1a(label.as_bytes())))
}

/// A seeded generator for the sub-stream `label` of `parent`.
pub fn stream(parent: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(parent, label))
}

/// Hashes a feature vector together with a seed; used for per-call tie
/// breaking so that decisions depend on `x` only.
pub fn hash_point(seed: u64, x: &[f64]) -> u64 {
    let mut h = mix64(seed);
    for v in x {
        // -0.0 and 0.0 decide identically
        let bits = if *v == 0.0 { 0 } else { v.to_bits() };
        h = mix64(h ^ bits);
    }
    h
}
