//! Deterministic seed splitting.
//!
//! Every random stream in the crate is derived from an explicit base seed and
//! a path of stream tags, so the draws for a given (device, server) pair or a
//! given simulation component never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stream.
pub type StreamRng = ChaCha8Rng;

pub(crate) mod tag {
    pub const SCENARIO: u64 = 0x5ce0;
    pub const CHANNEL_STATS: u64 = 0xc4a1;
    pub const SIM_ARRIVALS: u64 = 0xa221;
    pub const SIM_CHANNEL: u64 = 0x51c4;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of tags into a child seed.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Opens an independent stream for `path` under `base`.
pub fn stream(base: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive(base, path))
}
