//! Deterministic random substreams.
//!
//! Every stochastic component takes its own ChaCha stream whose seed is a
//! pure function of a master seed and a small tuple of labels, so adding a
//! new consumer never shifts the draws seen by an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// One round of the SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `labels` into `master` to produce a child seed.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix64(master), |acc, &label| mix64(acc ^ mix64(label)))
}

pub fn stream(master: u64, labels: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, labels))
}
