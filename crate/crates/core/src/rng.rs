//! Deterministic random streams.
//!
//! Every randomized routine takes a user seed and carves independent
//! substreams out of it by ChaCha stream id, so results depend only on
//! (seed, work partition) and never on how many threads ran the work.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids reserved for distinct purposes inside one simulation, so that
/// changing one input (say an arrival rate) leaves the other draws untouched.
pub(crate) mod purpose {
    pub const ARRIVALS: u64 = 1;
    pub const KEYS: u64 = 2;
    pub const ENDORSE: u64 = 3;
    pub const VALIDATE: u64 = 4;
    pub const CONSENSUS: u64 = 5;
    pub const THINNING: u64 = 6;
}
