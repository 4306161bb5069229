//! Pairwise pseudorandom streams.
//!
//! Pair `j` is the key shared by party `j` and party `j + 1 (mod 3)`. Each pair
//! has one independent ChaCha12 key per [`Purpose`], all derived from a single
//! master seed that stands in for an out-of-band key agreement.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Purpose {
    Zero = 0,
    Random = 1,
    Mask = 2,
    Dp = 3,
}

const PURPOSES: usize = 4;

/// Master-seed derived key material for all three pairs.
#[derive(Clone)]
pub(crate) struct PairKeys {
    keys: [[[u8; 32]; PURPOSES]; 3],
}

impl PairKeys {
    pub fn derive(master_seed: u64) -> PairKeys {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(crate::seeds::STREAM_PARTY_KEYS);
        let mut keys = [[[0u8; 32]; PURPOSES]; 3];
        for pair in keys.iter_mut() {
            for key in pair.iter_mut() {
                rng.fill_bytes(key);
            }
        }
        PairKeys { keys }
    }

    pub fn words(&self, pair: usize, purpose: Purpose) -> WordStream {
        WordStream(ChaCha12Rng::from_seed(self.keys[pair][purpose as usize]))
    }

    pub fn bits(&self, pair: usize, purpose: Purpose) -> BitStream {
        BitStream { rng: ChaCha12Rng::from_seed(self.keys[pair][purpose as usize]), word: 0, left: 0 }
    }
}

/// Stream of uniform ring words.
#[derive(Clone)]
pub(crate) struct WordStream(ChaCha12Rng);

impl WordStream {
    pub fn take(&mut self, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.0.next_u64()).collect()
    }

    pub fn next_word(&mut self) -> u64 {
        self.0.next_u64()
    }
}

/// Stream of uniform bits, consumed least-significant bit first.
#[derive(Clone)]
pub(crate) struct BitStream {
    rng: ChaCha12Rng,
    word: u64,
    left: u32,
}

impl BitStream {
    pub fn next_bit(&mut self) -> u64 {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }

    pub fn take(&mut self, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.next_bit()).collect()
    }
}
