//! Small deterministic hashing / RNG helpers.
//!
//! Scoring and ordering must be reproducible across runs, platforms, and
//! dependency upgrades, so the random scorer and random prompt order are
//! built on these pinned primitives instead of `std` hashers.

/// FNV-1a 64-bit hash.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 step: mixes `state` and returns the next value.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic score in [0, 1) keyed by (seed, key), independent of the
/// order items are scored in.
pub(crate) fn unit_score(seed: u64, key: &str) -> f64 {
    let mut state = seed ^ fnv1a64(key.as_bytes());
    let bits = splitmix64(&mut state);
    // 53 mantissa bits give a uniform dyadic rational in [0, 1)
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Tiny seeded RNG for deterministic shuffles.
pub(crate) struct DetRng {
    state: u64,
}

impl DetRng {
    pub(crate) fn new(seed: u64) -> Self {
        DetRng { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        splitmix64(&mut self.state)
    }

    /// Unbiased value in `0..bound` via rejection sampling.
    fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub(crate) fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
