//! Deterministic random streams.
//!
//! Every Monte Carlo routine draws from streams keyed by `(seed, path)`, where
//! `path` names the unit of work (chunk, trial, edge, block, ...). Results are
//! therefore independent of how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns an independent stream for the given seed and work path.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut id = splitmix64(path.len() as u64);
    for &p in path {
        id = splitmix64(id ^ splitmix64(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream tags used to keep the purposes of different draws apart.
pub(crate) mod tag {
    pub const CHUNK: u64 = 1;
    pub const TRIAL: u64 = 2;
    pub const DITHER: u64 = 3;
    pub const MAPPING: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const MESSAGE: u64 = 6;
    pub const CODE: u64 = 7;
    pub const VERIFY: u64 = 8;
}
