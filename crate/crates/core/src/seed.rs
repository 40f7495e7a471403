//! Reproducible random streams.
//!
//! Every work unit owns a `ChaCha8Rng` seeded through
//! `rand::SeedableRng::seed_from_u64` from a 64-bit seed derived as
//!
//! ```text
//! derive(parent, index) = splitmix64(parent ^ splitmix64(index))
//! replication seed      = derive(master_seed, replication_index)
//! life seed             = derive(replication seed, life_index)
//! ```
//!
//! where `splitmix64` is the finaliser of Steele, Lea and Flood's SplitMix64
//! (golden-gamma increment followed by the two multiply-xorshift rounds).
//! A stream depends only on its indices, so results do not depend on which
//! thread runs which unit or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StudyRng = ChaCha8Rng;

pub const GENERATOR: &str = "ChaCha8 (rand_chacha), seeded via seed_from_u64";
pub const SEED_MIXING: &str = "derive(parent, i) = splitmix64(parent ^ splitmix64(i))";

pub const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index))
}

pub fn replication_seed(master_seed: u64, replication: u64) -> u64 {
    derive(master_seed, replication)
}

pub fn life_seed(replication_seed: u64, life: u64) -> u64 {
    derive(replication_seed, life)
}

pub fn rng_from_seed(seed: u64) -> StudyRng {
    ChaCha8Rng::seed_from_u64(seed)
}
