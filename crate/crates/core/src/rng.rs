//! Deterministic RNG stream derivation.
//!
//! Every random decision in the pipeline draws from a stream keyed by the
//! run seed plus a small tuple (purpose, epoch or round, node, view). Streams
//! are independent of evaluation order, so parallel sampling reproduces the
//! serial result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags keep streams for different decisions disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Augment = 2,
    Batches = 3,
    Pairing = 4,
    Sample = 5,
    Inject = 6,
    Synth = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `seed` and a key tuple into a single 64-bit stream seed.
pub fn derive_seed(seed: u64, purpose: Purpose, keys: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0x5851_F42D_4C95_7F2D);
    h = splitmix64(h ^ purpose as u64);
    for &k in keys {
        h = splitmix64(h ^ k);
    }
    h
}

pub fn stream(seed: u64, purpose: Purpose, keys: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, purpose, keys))
}
