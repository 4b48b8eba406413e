//! Deterministic, splittable seeding.
//!
//! Every random draw in a simulation comes from a `ChaCha8Rng` keyed by a path of
//! integers rooted at the run seed, e.g. `[seed, LEVEL, 3, GROUP, 7, attempt]`.
//! Sibling paths give independent streams, so adding draws in one place never
//! shifts the draws made anywhere else.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedPath(Vec<u64>);

impl SeedPath {
    pub fn new(root: u64) -> Self {
        SeedPath(vec![root])
    }

    pub fn root(&self) -> u64 {
        self.0[0]
    }

    pub fn child(&self, label: u64) -> Self {
        let mut p = self.0.clone();
        p.push(label);
        SeedPath(p)
    }

    pub fn children(&self, labels: &[u64]) -> Self {
        let mut p = self.0.clone();
        p.extend_from_slice(labels);
        SeedPath(p)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = 0x243f_6a88_85a3_08d3u64;
        for &x in &self.0 {
            state = splitmix64(state ^ x);
        }
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream labels, so paths stay readable at call sites.
pub mod label {
    pub const PAYLOAD: u64 = 1;
    pub const PLACEMENT: u64 = 2;
    pub const STEP1: u64 = 3;
    pub const STEP2: u64 = 4;
    pub const TAILS: u64 = 5;
    pub const DEMANDS: u64 = 6;
}
