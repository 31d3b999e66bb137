//! Deterministic seed derivation for independent random streams.
//!
//! Every stochastic consumer (reproduction, scenario sets, per-offspring
//! evaluation) receives a seed derived from the run seed and a small path of
//! integers, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Stream tags keep derived seeds for different purposes disjoint.
pub mod stream {
    pub const REPRODUCTION: u64 = 0x5245_5052;
    pub const SCENARIO: u64 = 0x5343_454e;
    pub const EVALUATION: u64 = 0x4556_414c;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `root` with each element of `path` into a new 64-bit seed.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
