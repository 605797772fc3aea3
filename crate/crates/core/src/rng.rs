//! Seeded randomness. Every stochastic step draws from one [`TmRng`] so a
//! single user-visible seed fixes a whole run.

use rand::{RngCore, SeedableRng};

/// Portable, reproducible generator (xoshiro256++).
pub type TmRng = rand_xoshiro::Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> TmRng {
    TmRng::seed_from_u64(seed)
}

/// Fixed-point resolution of [`BernoulliMask`] probabilities.
pub const MASK_BITS: u32 = 16;

/// Generates 64-lane masks whose bits are independently 1 with probability
/// `q / 2^16`.
///
/// Built from the binary expansion of `q`: starting at the lowest set bit,
/// each further random word is OR-ed in for a 1 digit and AND-ed in for a 0
/// digit, which halves the running probability and adds the digit's weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BernoulliMask {
    q: u32,
    first: u32,
}

impl BernoulliMask {
    /// Mask with probability `p`, rounded to the nearest multiple of 2^-16.
    pub fn new(p: f64) -> Self {
        let scaled = p * f64::from(1u32 << MASK_BITS) + 0.5;
        let q = if scaled <= 0.0 {
            0
        } else if scaled >= f64::from(1u32 << MASK_BITS) {
            1 << MASK_BITS
        } else {
            scaled as u32
        };
        Self::from_fixed(q)
    }

    pub fn from_fixed(q: u32) -> Self {
        assert!(q <= 1 << MASK_BITS);
        let first = if q == 0 { MASK_BITS } else { q.trailing_zeros() };
        Self { q, first }
    }

    /// Probability numerator over 2^16.
    pub fn fixed(&self) -> u32 {
        self.q
    }

    pub fn probability(&self) -> f64 {
        f64::from(self.q) / f64::from(1u32 << MASK_BITS)
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.q == 0 {
            return 0;
        }
        if self.q == 1 << MASK_BITS {
            return u64::MAX;
        }
        let mut mask = rng.next_u64();
        for bit in self.first + 1..MASK_BITS {
            let r = rng.next_u64();
            if self.q >> bit & 1 == 1 {
                mask |= r;
            } else {
                mask &= r;
            }
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_and_extremes() {
        assert_eq!(BernoulliMask::new(0.5).fixed(), 32768);
        assert_eq!(BernoulliMask::new(1.0 / 3.0).fixed(), 21845);
        assert_eq!(BernoulliMask::new(0.0).sample(&mut seeded(1)), 0);
        assert_eq!(BernoulliMask::new(1.0).sample(&mut seeded(1)), u64::MAX);
    }

    #[test]
    fn empirical_rate_matches() {
        let mut rng = seeded(7);
        for p in [0.25, 1.0 / 3.0, 0.9, 1.0 / 64.0] {
            let mask = BernoulliMask::new(p);
            let draws = 20_000;
            let ones: u64 = (0..draws).map(|_| u64::from(mask.sample(&mut rng).count_ones())).sum();
            let rate = ones as f64 / (draws as f64 * 64.0);
            // 1.28M Bernoulli trials: sd <= 0.00045
            assert!((rate - mask.probability()).abs() < 0.003, "p={p} rate={rate}");
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let mask = BernoulliMask::new(0.3);
        let (mut a, mut b) = (seeded(99), seeded(99));
        for _ in 0..100 {
            assert_eq!(mask.sample(&mut a), mask.sample(&mut b));
        }
    }
}
