//! Counter-addressable random streams.
//!
//! Every consumer of randomness takes a `(master_seed, stream_id)` pair and
//! builds its own ChaCha8 generator; the ChaCha stream id selects one of 2^64
//! independent keystreams and the block counter addresses positions within it.
//! Work items keyed by stream id therefore produce the same numbers no matter
//! which thread runs them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Generator for `stream_id` under `master_seed`, positioned at word 0.
pub fn substream(master_seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Generator for `stream_id` positioned at 32-bit word `counter`.
pub fn substream_at(master_seed: u64, stream_id: u64, counter: u128) -> ChaCha8Rng {
    let mut rng = substream(master_seed, stream_id);
    rng.set_word_pos(counter);
    rng
}
