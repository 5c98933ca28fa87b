//! Hierarchical seed derivation.
//!
//! Every random stream in the simulator is a `ChaCha8Rng` seeded from a `u64`
//! derived from the master seed and a path of `(stream, index)` labels, so
//! that varying one axis of an experiment never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Named sub-streams of a parent seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Map = 1,
    Agent = 2,
    Tree = 3,
    Repetition = 4,
    Trial = 5,
    Traffic = 6,
    Instance = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child `index` in `stream` under `parent`.
pub fn derive_seed(parent: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(parent ^ splitmix64(stream as u64));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn child_rng(parent: u64, stream: Stream, index: u64) -> SimRng {
    rng_from_seed(derive_seed(parent, stream, index))
}
