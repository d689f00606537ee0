//! Deterministic seed derivation.
//!
//! Every random stream in the crate comes from a [`ChaCha8Rng`] seeded by a
//! 64-bit value. Experiments derive child seeds from one root seed with
//! [`derive_seed`], so a given `(root, labels)` pair always yields the same
//! stream regardless of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a path of labels below `root`, e.g. `[repeat, arm]`.
pub fn derive_seed(root: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix(root), |acc, &l| mix(acc ^ mix(l)))
}

/// Stable numeric label for a string tag (FNV-1a).
pub fn label(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
