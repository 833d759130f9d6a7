//! Counter-based seed splitting: one global seed fans out to independent,
//! reproducible per-stage streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a; stable across platforms and compiler versions.
fn stage_tag(stage: &str) -> u64 {
    stage.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedSplitter {
    root: u64,
}

impl SeedSplitter {
    pub fn new(root: u64) -> Self {
        SeedSplitter { root }
    }

    /// Seed for item `index` of `stage`.
    pub fn derive(&self, stage: &str, index: u64) -> u64 {
        let a = splitmix64(self.root ^ stage_tag(stage));
        splitmix64(a ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
    }

    /// Seed indexed by two counters, e.g. (frame, sensor).
    pub fn derive2(&self, stage: &str, i: u64, j: u64) -> u64 {
        splitmix64(self.derive(stage, i) ^ splitmix64(j.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
    }

    pub fn rng(&self, stage: &str, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(stage, index))
    }
}
