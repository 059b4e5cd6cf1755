//! Seed derivation. Every stochastic component owns a ChaCha stream derived
//! from a master seed and a purpose label so that streams never alias and
//! policies cannot perturb each other's randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Derives a child seed from `seed` and a path of labels/indices.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    let out = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&out[..8]);
    u64::from_le_bytes(b)
}

pub fn stream(seed: u64, label: &str, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, label, index))
}

/// Independent random streams for one episode realization.
///
/// Fading, counters and sensing noise are policy-independent, so replaying a
/// realization seed under different policies reproduces identical channel
/// and counter traces.
#[derive(Clone, Debug)]
pub struct EpisodeStreams {
    pub fading: SimRng,
    pub counters: SimRng,
    pub sensing: SimRng,
}

impl EpisodeStreams {
    pub fn new(realization_seed: u64) -> Self {
        Self {
            fading: stream(realization_seed, "fading", 0),
            counters: stream(realization_seed, "counters", 0),
            sensing: stream(realization_seed, "sensing", 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_differ_by_label_and_index() {
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
        assert_eq!(derive_seed(7, "x", 3), derive_seed(7, "x", 3));
        let mut a = stream(1, "a", 0);
        let mut b = stream(1, "a", 0);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }
}
