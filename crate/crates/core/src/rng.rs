//! Random stream derivation.
//!
//! Every stream is a ChaCha8 generator seeded from a 64-bit key obtained by
//! folding `(root, purpose, index)` through SplitMix64. Streams therefore
//! depend only on their coordinates, never on how many draws another stream
//! consumed, so replicates and subjects can be generated in any order (or in
//! parallel) and still reproduce bit for bit.
//!
//! Layout used throughout the crate:
//!
//! | purpose              | index          |
//! |----------------------|----------------|
//! | [`Purpose::Replicate`] | replicate number (yields a trial seed) |
//! | [`Purpose::Entry`]     | 0              |
//! | [`Purpose::Allocation`]| subject index  |
//! | [`Purpose::Event`]     | subject index  |
//! | [`Purpose::Censor`]    | subject index  |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Replicate = 1,
    Entry = 2,
    Allocation = 3,
    Event = 4,
    Censor = 5,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Key of the stream at coordinates `(root, purpose, index)`.
pub fn derive_key(root: u64, purpose: Purpose, index: u64) -> u64 {
    let a = splitmix64(root);
    let b = splitmix64(a ^ (purpose as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(b ^ index.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7))
}

pub fn stream(root: u64, purpose: Purpose, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_key(root, purpose, index))
}

/// Trial seed of replicate `index` under a root seed.
pub fn replicate_seed(root: u64, index: u64) -> u64 {
    derive_key(root, Purpose::Replicate, index)
}
