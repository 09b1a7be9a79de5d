//! Seed derivation and the crate's deterministic random source.
//!
//! Every randomized routine takes a `u64` seed and owns a private stream, so
//! results never depend on call order or thread scheduling. Sub-streams
//! (per view, per graph order, per restart, per grid cell) are derived by
//! mixing the indices into the base seed rather than by drawing from a
//! shared generator.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout the crate. ChaCha gives identical streams on
/// every platform for a given seed.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 step; a well-distributed 64-bit mixer.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a base seed and two indices.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ a.wrapping_mul(0xd6e8_feb8_6659_fd93)) ^ b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;
    use std::collections::HashSet;

    #[test]
    fn derived_seeds_are_deterministic() {
        assert_eq!(derive_seed(42, 1, 2), derive_seed(42, 1, 2));
    }

    #[test]
    fn derived_seeds_separate_indices() {
        let mut seen = HashSet::new();
        for a in 0..50u64 {
            for b in 0..50u64 {
                assert!(seen.insert(derive_seed(7, a, b)), "collision at ({a}, {b})");
            }
        }
        // swapping the roles of the indices must not collide either
        assert_ne!(derive_seed(7, 1, 2), derive_seed(7, 2, 1));
        assert_ne!(derive_seed(7, 0, 1), derive_seed(8, 0, 1));
    }

    #[test]
    fn streams_reproduce() {
        let mut a = rng_from_seed(123);
        let mut b = rng_from_seed(123);
        for _ in 0..32 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
