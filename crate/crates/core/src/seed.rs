//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! whose seed is derived from a root seed plus a stream index, so that
//! parallel work can be split without depending on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` of `root`.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    mix(mix(root.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ stream.wrapping_mul(0xd134_2543_de82_ef95))
}

/// Derives a seed from a root seed and a textual label (board id, purpose).
pub fn derive_seed_str(root: u64, label: &str) -> u64 {
    // FNV-1a; stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive_seed(root, h)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sub_rng(root: u64, stream: u64) -> ChaCha8Rng {
    rng_from(derive_seed(root, stream))
}
