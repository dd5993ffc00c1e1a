//! Seed derivation for independent, schedule-free random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a
//! master seed mixed with a purpose tag and a few integer coordinates
//! (client id, round, trial, ...). Two streams share state only if all of
//! those agree, so results never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep streams for different jobs apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Geometry = 1,
    Samples = 2,
    TestSet = 3,
    Poison = 4,
    Init = 5,
    Training = 6,
    Roster = 7,
    Deployment = 8,
    Trial = 9,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a stream tag and coordinates into a new 64-bit seed.
pub fn derive(seed: u64, stream: Stream, coords: &[u64]) -> u64 {
    let mut h = splitmix(seed ^ splitmix(stream as u64));
    for &c in coords {
        h = splitmix(h ^ splitmix(c.wrapping_add(GOLDEN)));
    }
    h
}

pub fn rng(seed: u64, stream: Stream, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, stream, coords))
}
