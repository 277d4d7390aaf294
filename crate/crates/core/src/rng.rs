//! Counter-based random streams.
//!
//! Every random draw in the crate is addressed by `(seed, stream)`: the
//! stream index is the Monte Carlo sample or trial number, so a result never
//! depends on how work was split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha stream `stream` under the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
