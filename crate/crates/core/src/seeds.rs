//! Sub-seed derivation. Every consumer of randomness gets its own ChaCha
//! stream of the master seed so that adding draws in one place never shifts
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub(crate) const STREAM_PARTY_KEYS: u64 = 1;
pub(crate) const STREAM_DEALER: u64 = 2;
pub(crate) const STREAM_HOLDERS: u64 = 3;
pub(crate) const STREAM_PARTITION: u64 = 4;
pub(crate) const STREAM_SAMPLING: u64 = 5;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Holder `i` shares its inputs with its own generator.
pub(crate) fn holder_stream(seed: u64, holder: usize) -> ChaCha12Rng {
    stream(seed, STREAM_HOLDERS + ((holder as u64 + 1) << 8))
}
