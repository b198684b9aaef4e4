//! Seed hierarchy. Every run derives independent ChaCha streams from one
//! root seed so that, for example, drift probes never perturb the input
//! stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes that get their own generator stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Input = 1,
    Pool = 2,
    Algorithm = 3,
    Probe = 4,
    Body = 5,
    Tests = 6,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// A child generator for a sub-purpose inside a stream (e.g. one probe
/// checkpoint); `index` selects the word position so children never overlap
/// for realistic draw counts.
pub fn child_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = stream_rng(seed, stream);
    rng.set_word_pos((index as u128) << 48);
    rng
}
