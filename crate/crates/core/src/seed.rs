//! Deterministic splitting of one root seed into named, independent streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// A root seed from which named sub-streams (`init`, `rollout`, `noise`, ...) are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree(u64);

impl SeedTree {
    pub fn new(root: u64) -> Self {
        SeedTree(root)
    }

    pub fn root(&self) -> u64 {
        self.0
    }

    /// Child tree for a named purpose.
    pub fn child(&self, name: &str) -> SeedTree {
        SeedTree(splitmix64(self.0 ^ splitmix64(fnv1a(name))))
    }

    /// Child tree for an indexed item (episode, sample, worker job).
    pub fn index(&self, i: u64) -> SeedTree {
        SeedTree(splitmix64(self.0.wrapping_add(splitmix64(i.wrapping_add(0x5851_f42d_4c95_7f2d)))))
    }

    pub fn rng(&self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
