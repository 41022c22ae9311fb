//! Seeding scheme.
//!
//! Every Monte-Carlo stream is a ChaCha8 generator keyed by a 64-bit seed.
//! Sample `i` of a run with base seed `b` uses the key
//! `derive_seed(b, i)`; inside one sample, independent draws (jump counts,
//! jump locations, marks, Gaussian increments) use distinct ChaCha stream
//! ids of the same key, so they never share random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha stream ids used inside one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Count = 0,
    Location = 1,
    Mark = 2,
    Gaussian = 3,
    /// Offset for the jump streams of the second, independent Lévy sheet of
    /// a sample (the heat solver draws the Brownian and the Lévy noise from
    /// one key).
    Secondary = 16,
}

pub const SEED_SCHEME: &str =
    "sample seed = splitmix64(base_seed ^ splitmix64(sample_index)); ChaCha8 streams: count=0 location=1 mark=2 gaussian=3";

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
