//! Reproducible random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream: the key comes from the
//! run seed and the stream id from the trajectory index, so the numbers a
//! trajectory sees do not depend on how an ensemble is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
