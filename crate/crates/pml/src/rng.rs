use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The one RNG used everywhere randomness is needed.
///
/// ChaCha8 is seedable, portable, and produces the same stream on every
/// platform, which is what makes the fixed-seed pipelines byte-reproducible.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from a parent seed and a stream tag.
///
/// SplitMix64 finalizer: any bit flip in the input avalanches across the
/// output, so neighboring tags give unrelated streams. Used to give each
/// pipeline stage (collection, shuffling, init, ...) its own stream while
/// the user supplies a single seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
