//! Deterministic random streams.
//!
//! Every consumer gets its own ChaCha stream keyed by `(seed, stream_id)`, so
//! parallel trials and schemes never share state and results do not depend
//! on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used for the per-trial draws.
pub mod streams {
    pub const SCENARIO: u64 = 0;
    /// Initial grid layout shared by the AO, MRT and ZF schemes.
    pub const LAYOUT_INIT: u64 = 1;
    pub const PSO: u64 = 2;
    pub const THEORY: u64 = 3;
}

pub fn seeded_rng(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Mixes a base seed with an index (SplitMix64 finaliser).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
