//! Seed derivation.
//!
//! Every random stream is derived from one master seed by hashing
//! `(master, stream, index)` through SplitMix64. Streams in use:
//!
//! | stream | consumer |
//! |---|---|
//! | [`CLUSTERING`] | Louvain visiting order; ECG pass `i` uses index `i`, the final pass `u64::MAX` |
//! | [`SAMPLING`] | GCL graph sampling, index = sample number |
//! | [`SYNTH_GRAPH`] | planted-partition edges, index = attempt number |
//! | [`SYNTH_EMBEDDING`] | synthetic coordinates |
//!
//! Derived seeds do not depend on thread scheduling, so parallel work stays
//! reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CLUSTERING: u64 = 1;
pub const SAMPLING: u64 = 2;
pub const SYNTH_GRAPH: u64 = 3;
pub const SYNTH_EMBEDDING: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
