//! Neighbor-sampling PRNG.
//!
//! Fragments written by one implementation must decode in another, so the
//! generator that maps a symbol seed to its degree and neighbor set is
//! specified bit-exactly:
//!
//! * state starts at the seed,
//! * each draw does `state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64)`
//!   and outputs `state ^ (state >> 33)`,
//! * the degree comes from inverse-CDF lookup on `output / 2^64`,
//! * neighbor indices come from a virtual Fisher-Yates shuffle over
//!   `0..k-1`, one draw per index, reduced modulo the remaining range with
//!   modulo-bias rejection (draws `>= floor(2^64 / range) * range` are
//!   rejected and redrawn).

use std::collections::HashMap;

const MULTIPLIER: u64 = 6364136223846793005;
const INCREMENT: u64 = 1442695040888963407;

/// The normative symbol-seed generator. Not a general-purpose RNG.
#[derive(Debug, Clone)]
pub(crate) struct NeighborRng {
    state: u64,
}

impl NeighborRng {
    pub(crate) fn new(seed: u64) -> Self {
        NeighborRng { state: seed }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(MULTIPLIER)
            .wrapping_add(INCREMENT);
        self.state ^ (self.state >> 33)
    }

    /// Uniform value in [0, 1) as `output / 2^64`.
    pub(crate) fn next_unit(&mut self) -> f64 {
        self.next_u64() as f64 / 18446744073709551616.0
    }

    /// Uniform value in [0, range) with modulo-bias rejection.
    pub(crate) fn next_below(&mut self, range: u64) -> u64 {
        debug_assert!(range >= 1);
        // floor(2^64 / range) * range, held in u128 because range = 1
        // makes the bound 2^64 itself.
        let bound = ((1u128 << 64) / u128::from(range)) * u128::from(range);
        loop {
            let draw = self.next_u64();
            if u128::from(draw) < bound {
                return draw % range;
            }
        }
    }
}

/// Samples `count` distinct indices from `0..k` via a virtual Fisher-Yates
/// shuffle, returned sorted ascending.
pub(crate) fn sample_distinct(rng: &mut NeighborRng, k: usize, count: usize) -> Vec<usize> {
    debug_assert!(count <= k);
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    let mut picked = Vec::with_capacity(count);
    for i in 0..count {
        let remaining = (k - i) as u64;
        let j = i + rng.next_below(remaining) as usize;
        let value_i = *swapped.get(&i).unwrap_or(&i);
        let value_j = *swapped.get(&j).unwrap_or(&j);
        picked.push(value_j);
        swapped.insert(j, value_i);
    }
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_deterministic() {
        let mut a = NeighborRng::new(42);
        let mut b = NeighborRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn first_output_follows_the_recurrence() {
        let mut rng = NeighborRng::new(42);
        let state = 42u64.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        assert_eq!(rng.next_u64(), state ^ (state >> 33));
    }

    #[test]
    fn next_below_respects_range() {
        let mut rng = NeighborRng::new(7);
        for range in [1u64, 2, 3, 10, 1000, u64::MAX] {
            for _ in 0..50 {
                assert!(rng.next_below(range) < range);
            }
        }
    }

    #[test]
    fn sample_distinct_yields_distinct_sorted() {
        let mut rng = NeighborRng::new(9);
        for _ in 0..200 {
            let picked = sample_distinct(&mut rng, 20, 7);
            assert_eq!(picked.len(), 7);
            assert!(picked.windows(2).all(|w| w[0] < w[1]));
            assert!(picked.iter().all(|&i| i < 20));
        }
    }

    #[test]
    fn sample_distinct_full_range_is_permutation_of_all() {
        let mut rng = NeighborRng::new(3);
        let picked = sample_distinct(&mut rng, 8, 8);
        assert_eq!(picked, (0..8).collect::<Vec<_>>());
    }
}
