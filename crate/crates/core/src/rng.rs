//! Splittable random streams.
//!
//! Stream `i` of a run with seed `s` is ChaCha8 keyed by `seed_from_u64(s)`
//! (PCG32 expansion of `s` into the 256-bit key) with the ChaCha stream
//! (nonce) set to `i`. ChaCha is counter based, so every stream is an
//! independent, reproducible sequence no matter which worker draws it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
