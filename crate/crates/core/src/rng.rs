//! Counter-based seeding.
//!
//! Every random draw is keyed by `(seed, context..., sample index)` so results
//! do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into a single 64-bit key.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed used for row `row` of a dataset-level behavior.
pub fn row_seed(seed: u64, row: usize) -> u64 {
    derive_seed(seed, &[0x524F_5700, row as u64])
}

/// Generator for one sample of a stochastic evaluation at subset bits `subset`.
pub fn sample_rng(seed: u64, subset: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[subset, index]))
}

/// Generator for sample `index` of a summarizer (permutations, masks).
pub fn summary_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x5355_4D00, index]))
}
