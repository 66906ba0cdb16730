//! Seed derivation independent of scheduling order.

/// One step of the SplitMix64 generator, used as a 64-bit mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for map `map_id` generated from `master`.
pub fn map_seed(master: u64, map_id: usize) -> u64 {
    splitmix64(master ^ splitmix64(map_id as u64))
}

/// Seed for the episode of strategy `strategy_id` on map `map_id`.
pub fn episode_seed(master: u64, map_id: usize, strategy_id: usize) -> u64 {
    splitmix64(map_seed(master, map_id) ^ splitmix64(!(strategy_id as u64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference generator seeded with 0
        let mut state = 0u64;
        let mut next = || {
            let out = splitmix64(state);
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            out
        };
        assert_eq!(next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(next(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(next(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = HashSet::new();
        for m in 0..100 {
            for s in 0..8 {
                assert!(seen.insert(episode_seed(7, m, s)));
            }
        }
    }
}
