//! Shared public randomness.
//!
//! A [`RandomTape`] is a 256-bit key. Substreams are derived by hashing the
//! key together with a string label and an index, so the bits any component
//! draws depend only on `(seed, label path, index)` and never on execution
//! order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RandomTape {
    seed: u64,
    key: [u8; 32],
}

impl RandomTape {
    pub fn new(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"nof-tape/v1");
        h.update(seed.to_le_bytes());
        Self {
            seed,
            key: h.finalize().into(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.seed
    }

    fn derive(&self, kind: u8, label: &str, index: u64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update([kind]);
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        h.finalize().into()
    }

    /// An independent tape for a sub-computation.
    pub fn child(&self, label: &str, index: u64) -> RandomTape {
        RandomTape {
            seed: self.seed,
            key: self.derive(0, label, index),
        }
    }

    /// A bit stream for direct sampling.
    pub fn stream(&self, label: &str, index: u64) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.derive(1, label, index))
    }
}
