//! Named sub-seeds derived from one global seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SYNTH: &str = "synth";
pub const FOLDS: &str = "folds";
pub const WALKS: &str = "walks";
pub const SKIPGRAM: &str = "skipgram";
pub const AUGMENT: &str = "augment";
pub const GBDT: &str = "gbdt";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for the stage called `name`. Stable across platforms.
pub fn sub_seed(global: u64, name: &str) -> u64 {
    // FNV-1a over the name, then mixed with the global seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(global ^ splitmix64(h))
}

/// Derive an indexed stream seed, e.g. one per walk or per fold job.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
