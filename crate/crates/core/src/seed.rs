//! Seed derivation. Every random choice in the toolkit draws from a
//! ChaCha8 stream whose seed is derived from a run seed plus a purpose tag,
//! so independent consumers never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into derived seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Oversample = 2,
    Undersample = 3,
    Init = 4,
    EpochShuffle = 5,
    Dropout = 6,
    Embedding = 7,
    Synthetic = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(seed ^ (stream as u64).wrapping_mul(0xa076_1d64_78bd_642f));
    splitmix64(a ^ splitmix64(index.wrapping_add(0xe703_7ed1_a0b4_28db)))
}

pub fn rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, stream, index))
}
