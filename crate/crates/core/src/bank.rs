//! Dense Tsetlin automaton bank, clause evaluation and prediction.
//!
//! Automaton states live in `[1, 2N]`; a literal is included while its state
//! is at least `N + 1`. States are stored bit-sliced: for every clause there
//! are `B` bit planes of `W` words each, so one `u64` word holds one state bit
//! for 64 literals. Each state is kept as `v = state - 1 + offset` where
//! `offset = 2^(B-1) - N`, which makes the top plane exactly the include mask
//! for any `N`, not just powers of two.

use alloc::vec;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};

use crate::bits;
use crate::codec::Reader;
use crate::rng::TmRng;
use crate::{DecodeError, Error, Result};

const BANK_MAGIC: &[u8; 4] = b"TMBK";
const BANK_VERSION: u8 = 1;
const BANK_HEADER_LEN: usize = 17;

pub const DEFAULT_HALF_STATES: u32 = 128;
pub const MAX_HALF_STATES: u32 = 1 << 14;
pub const MAX_LITERALS: usize = u16::MAX as usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub n_classes: usize,
    /// `M`; the first half of each class's clauses vote for it, the rest against.
    pub clauses_per_class: usize,
    /// `T`, the class-sum target that gates feedback.
    pub threshold: u32,
    /// `s`, the specificity controlling include pressure under Type I feedback.
    pub specificity: f64,
    /// `N`; each automaton has `2N` states.
    pub half_states: u32,
    pub seed: u64,
    pub epochs: u32,
    /// Off by default. See [`crate::feedback::Specificity::boosted`].
    pub boost_true_positive: bool,
}

impl Hyperparams {
    pub fn new(n_classes: usize, clauses_per_class: usize, threshold: u32, specificity: f64) -> Self {
        Self {
            n_classes,
            clauses_per_class,
            threshold,
            specificity,
            half_states: DEFAULT_HALF_STATES,
            seed: 0,
            epochs: 1,
            boost_true_positive: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::TooFewClasses(self.n_classes));
        }
        if self.n_classes > usize::from(u16::MAX) {
            return Err(Error::InvalidHyperparameter("at most 65535 classes"));
        }
        let m = self.clauses_per_class;
        if m < 2 || !m.is_multiple_of(2) || m > usize::from(u16::MAX) {
            return Err(Error::InvalidHyperparameter("clauses per class must be even, in [2, 65534]"));
        }
        if self.threshold == 0 {
            return Err(Error::InvalidHyperparameter("T must be at least 1"));
        }
        if !(self.specificity > 1.0 && self.specificity.is_finite()) {
            return Err(Error::InvalidHyperparameter("s must be a finite value > 1"));
        }
        if self.half_states == 0 || self.half_states > MAX_HALF_STATES {
            return Err(Error::InvalidHyperparameter("N must be in [1, 16384]"));
        }
        Ok(())
    }

    pub fn rng(&self) -> TmRng {
        TmRng::seed_from_u64(self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Clauses with no includes output 1.
    Train,
    /// Clauses with no includes output 0.
    Infer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub class_sums: Vec<i32>,
    pub predicted: usize,
}

impl Prediction {
    /// Argmax with ties going to the lowest class index.
    pub fn from_sums(class_sums: Vec<i32>) -> Self {
        let predicted = argmax(&class_sums);
        Self { class_sums, predicted }
    }
}

pub(crate) fn argmax(sums: &[i32]) -> usize {
    let mut best = 0;
    for (c, &s) in sums.iter().enumerate().skip(1) {
        if s > sums[best] {
            best = c;
        }
    }
    best
}

/// `+1` for the first half of a class's clauses, `-1` for the second.
#[inline]
pub fn polarity(clause: usize, clauses_per_class: usize) -> i32 {
    if clause < clauses_per_class / 2 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseBank {
    n_classes: usize,
    clauses_per_class: usize,
    n_literals: usize,
    half_states: u32,
    words: usize,
    planes: usize,
    offset: u32,
    data: Vec<u64>,
}

impl ClauseBank {
    fn empty(n_classes: usize, clauses_per_class: usize, n_literals: usize, half_states: u32) -> Result<Self> {
        if n_literals == 0 {
            return Err(Error::NoLiterals);
        }
        if !n_literals.is_multiple_of(2) {
            return Err(Error::OddLiteralCount(n_literals));
        }
        if n_literals > MAX_LITERALS {
            return Err(Error::TooManyLiterals(n_literals));
        }
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        if clauses_per_class < 2 || !clauses_per_class.is_multiple_of(2) || clauses_per_class > usize::from(u16::MAX) {
            return Err(Error::InvalidHyperparameter("clauses per class must be even, in [2, 65534]"));
        }
        if half_states == 0 || half_states > MAX_HALF_STATES {
            return Err(Error::InvalidHyperparameter("N must be in [1, 16384]"));
        }
        let planes = 1 + half_states.next_power_of_two().trailing_zeros() as usize;
        let words = bits::words_for(n_literals);
        Ok(Self {
            n_classes,
            clauses_per_class,
            n_literals,
            half_states,
            words,
            planes,
            offset: (1 << (planes - 1)) - half_states,
            data: vec![0; n_classes * clauses_per_class * planes * words],
        })
    }

    /// A bank with every automaton set to `N` or `N + 1` with equal probability.
    pub fn new<R: RngCore + ?Sized>(hyper: &Hyperparams, n_literals: usize, rng: &mut R) -> Result<Self> {
        hyper.validate()?;
        let mut bank = Self::empty(hyper.n_classes, hyper.clauses_per_class, n_literals, hyper.half_states)?;
        let (words, planes, n) = (bank.words, bank.planes, bank.n_literals);
        for chunk in bank.data.chunks_exact_mut(planes * words) {
            for w in 0..words {
                let include = rng.next_u64() & bits::word_mask(n, w);
                for p in 0..planes - 1 {
                    chunk[p * words + w] = !include & bits::word_mask(n, w);
                }
                chunk[(planes - 1) * words + w] = include;
            }
        }
        Ok(bank)
    }

    /// A bank with every automaton in `state`.
    pub fn filled(
        n_classes: usize,
        clauses_per_class: usize,
        n_literals: usize,
        half_states: u32,
        state: u32,
    ) -> Result<Self> {
        let states = vec![state; n_classes * clauses_per_class * n_literals];
        Self::from_states(n_classes, clauses_per_class, n_literals, half_states, &states)
    }

    /// Builds a bank from states laid out as `[class][clause][literal]`.
    pub fn from_states(
        n_classes: usize,
        clauses_per_class: usize,
        n_literals: usize,
        half_states: u32,
        states: &[u32],
    ) -> Result<Self> {
        let mut bank = Self::empty(n_classes, clauses_per_class, n_literals, half_states)?;
        let expected = n_classes * clauses_per_class * n_literals;
        if states.len() != expected {
            return Err(Error::StateCountMismatch { expected, found: states.len() });
        }
        let max = bank.max_state();
        if let Some(&state) = states.iter().find(|&&s| s == 0 || s > max) {
            return Err(Error::StateOutOfRange { state, max });
        }
        for (i, &state) in states.iter().enumerate() {
            let (cj, k) = (i / n_literals, i % n_literals);
            bank.set_state(cj / clauses_per_class, cj % clauses_per_class, k, state);
        }
        Ok(bank)
    }

    /// All states laid out as `[class][clause][literal]`.
    pub fn states(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n_classes * self.clauses_per_class * self.n_literals);
        for c in 0..self.n_classes {
            for j in 0..self.clauses_per_class {
                out.extend((0..self.n_literals).map(|k| self.state(c, j, k)));
            }
        }
        out
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn clauses_per_class(&self) -> usize {
        self.clauses_per_class
    }

    pub fn n_literals(&self) -> usize {
        self.n_literals
    }

    pub fn half_states(&self) -> u32 {
        self.half_states
    }

    pub fn max_state(&self) -> u32 {
        2 * self.half_states
    }

    /// Words per packed literal vector.
    pub fn words(&self) -> usize {
        self.words
    }

    pub fn polarity(&self, clause: usize) -> i32 {
        polarity(clause, self.clauses_per_class)
    }

    #[inline]
    fn clause_base(&self, class: usize, clause: usize) -> usize {
        debug_assert!(class < self.n_classes && clause < self.clauses_per_class);
        (class * self.clauses_per_class + clause) * self.planes * self.words
    }

    pub fn state(&self, class: usize, clause: usize, literal: usize) -> u32 {
        assert!(literal < self.n_literals, "literal {literal} out of range");
        let base = self.clause_base(class, clause);
        let (w, bit) = (literal / 64, literal % 64);
        let v = (0..self.planes).fold(0u32, |v, p| v | ((self.data[base + p * self.words + w] >> bit & 1) as u32) << p);
        v + 1 - self.offset
    }

    /// # Panics
    /// If `state` is outside `[1, 2N]`.
    pub fn set_state(&mut self, class: usize, clause: usize, literal: usize, state: u32) {
        assert!(
            (1..=self.max_state()).contains(&state),
            "state {state} outside [1, {}]",
            self.max_state()
        );
        assert!(literal < self.n_literals, "literal {literal} out of range");
        let base = self.clause_base(class, clause);
        let v = state - 1 + self.offset;
        let (w, bit) = (literal / 64, literal % 64);
        for p in 0..self.planes {
            let word = &mut self.data[base + p * self.words + w];
            *word = (*word & !(1 << bit)) | u64::from(v >> p & 1) << bit;
        }
    }

    /// Packed include mask of one clause.
    #[inline]
    pub fn include_words(&self, class: usize, clause: usize) -> &[u64] {
        let start = self.clause_base(class, clause) + (self.planes - 1) * self.words;
        &self.data[start..start + self.words]
    }

    pub fn is_included(&self, class: usize, clause: usize, literal: usize) -> bool {
        bits::get(self.include_words(class, clause), literal)
    }

    /// Included literal indices of one clause, ascending.
    pub fn included_literals(&self, class: usize, clause: usize) -> impl Iterator<Item = usize> + '_ {
        bits::ones(self.include_words(class, clause))
    }

    pub fn clause_includes(&self, class: usize, clause: usize) -> usize {
        bits::count_ones(self.include_words(class, clause))
    }

    pub fn total_includes(&self) -> usize {
        (0..self.n_classes)
            .flat_map(|c| (0..self.clauses_per_class).map(move |j| (c, j)))
            .map(|(c, j)| self.clause_includes(c, j))
            .sum()
    }

    /// Mean number of included literals over all clauses of all classes.
    pub fn includes_per_clause(&self) -> f64 {
        self.total_includes() as f64 / (self.n_classes * self.clauses_per_class) as f64
    }

    /// Conjunction of the clause's included literals; empty clauses follow `mode`.
    ///
    /// # Panics
    /// If `literals` is not `words()` long.
    #[inline]
    pub fn clause_output(&self, class: usize, clause: usize, literals: &[u64], mode: Mode) -> bool {
        assert_eq!(literals.len(), self.words, "literal vector length mismatch");
        let mut any = 0;
        for (&inc, &x) in self.include_words(class, clause).iter().zip(literals) {
            if inc & !x != 0 {
                return false;
            }
            any |= inc;
        }
        mode == Mode::Train || any != 0
    }

    /// `sum_j p_j * C_j` over the class's clauses.
    pub fn class_sum(&self, class: usize, literals: &[u64], mode: Mode) -> i32 {
        (0..self.clauses_per_class)
            .filter(|&j| self.clause_output(class, j, literals, mode))
            .map(|j| self.polarity(j))
            .sum()
    }

    pub fn class_sums_into(&self, literals: &[u64], mode: Mode, out: &mut [i32]) {
        for (c, sum) in out.iter_mut().enumerate().take(self.n_classes) {
            *sum = self.class_sum(c, literals, mode);
        }
    }

    /// Inference-mode class sums and their argmax.
    pub fn predict(&self, literals: &[u64]) -> Prediction {
        let mut sums = vec![0; self.n_classes];
        self.class_sums_into(literals, Mode::Infer, &mut sums);
        Prediction::from_sums(sums)
    }

    /// Bank dump: magic `TMBK`, version 1, `n_classes` u16, clauses per class
    /// u16, `n_literals` u32, `N` u32, then every state as u16 in
    /// `[class][clause][literal]` order, all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let states = self.states();
        let mut out = Vec::with_capacity(BANK_HEADER_LEN + 2 * states.len());
        out.extend_from_slice(BANK_MAGIC);
        out.push(BANK_VERSION);
        out.extend_from_slice(&(self.n_classes as u16).to_le_bytes());
        out.extend_from_slice(&(self.clauses_per_class as u16).to_le_bytes());
        out.extend_from_slice(&(self.n_literals as u32).to_le_bytes());
        out.extend_from_slice(&self.half_states.to_le_bytes());
        for s in states {
            out.extend_from_slice(&(s as u16).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> core::result::Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.magic(BANK_MAGIC)?;
        let version = r.u8()?;
        if version != BANK_VERSION {
            return Err(DecodeError::UnsupportedVersion(version));
        }
        let n_classes = usize::from(r.u16()?);
        let clauses = usize::from(r.u16()?);
        let n_literals = r.u32()? as usize;
        let half_states = r.u32()?;
        let mut bank = Self::empty(n_classes, clauses, n_literals, half_states)
            .map_err(|_| DecodeError::InvalidHeader("bank dimensions"))?;
        let max = bank.max_state();
        let payload = r.take(2 * n_classes * clauses * n_literals)?;
        r.finish()?;
        for (i, pair) in payload.chunks_exact(2).enumerate() {
            let state = u32::from(u16::from_le_bytes([pair[0], pair[1]]));
            if state == 0 || state > max {
                return Err(DecodeError::StateOutOfRange { state, max });
            }
            let (cj, k) = (i / n_literals, i % n_literals);
            bank.set_state(cj / clauses, cj % clauses, k, state);
        }
        Ok(bank)
    }

    pub(crate) fn clause_mut(&mut self, class: usize, clause: usize) -> ClauseStates<'_> {
        let base = self.clause_base(class, clause);
        let len = self.planes * self.words;
        ClauseStates {
            data: &mut self.data[base..base + len],
            words: self.words,
            planes: self.planes,
            min: self.offset,
            max: self.offset + 2 * self.half_states - 1,
            n_literals: self.n_literals,
        }
    }
}

/// Mutable bit-sliced view of one clause's automata. Operations act on the
/// 64 lanes of word `w` selected by `mask`, saturating at the state bounds.
pub(crate) struct ClauseStates<'a> {
    data: &'a mut [u64],
    words: usize,
    planes: usize,
    min: u32,
    max: u32,
    n_literals: usize,
}

impl ClauseStates<'_> {
    pub fn words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn valid_mask(&self, w: usize) -> u64 {
        bits::word_mask(self.n_literals, w)
    }

    #[inline]
    pub fn include_word(&self, w: usize) -> u64 {
        self.data[(self.planes - 1) * self.words + w]
    }

    #[inline]
    fn lanes_equal(&self, w: usize, value: u32) -> u64 {
        let mut eq = u64::MAX;
        for p in 0..self.planes {
            let x = self.data[p * self.words + w];
            eq &= if value >> p & 1 == 1 { x } else { !x };
        }
        eq
    }

    #[inline]
    pub fn increment(&mut self, w: usize, mask: u64) {
        let mut carry = mask & !self.lanes_equal(w, self.max);
        for p in 0..self.planes {
            if carry == 0 {
                break;
            }
            let x = &mut self.data[p * self.words + w];
            let next = *x & carry;
            *x ^= carry;
            carry = next;
        }
    }

    #[inline]
    pub fn decrement(&mut self, w: usize, mask: u64) {
        let mut borrow = mask & !self.lanes_equal(w, self.min);
        for p in 0..self.planes {
            if borrow == 0 {
                break;
            }
            let x = &mut self.data[p * self.words + w];
            let next = !*x & borrow;
            *x ^= borrow;
            borrow = next;
        }
    }

    /// Subtracts `amount` from the masked lanes. Callers guarantee no lane
    /// drops below the minimum state.
    pub fn subtract(&mut self, w: usize, mask: u64, amount: u32) {
        let mut borrow = 0u64;
        for p in 0..self.planes {
            let x = self.data[p * self.words + w];
            let k = if amount >> p & 1 == 1 { mask } else { 0 };
            self.data[p * self.words + w] = x ^ k ^ borrow;
            borrow = (!x & (k | borrow)) | (x & k & borrow);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn hyper(n: u32) -> Hyperparams {
        Hyperparams { half_states: n, ..Hyperparams::new(2, 4, 10, 3.0) }
    }

    #[test]
    fn init_states_are_middle() {
        let bank = ClauseBank::new(&hyper(128), 70, &mut seeded(1)).unwrap();
        assert!(bank.states().iter().all(|&s| s == 128 || s == 129));
        for n in [1, 4, 5, 100] {
            let bank = ClauseBank::new(&hyper(n), 10, &mut seeded(2)).unwrap();
            assert!(bank.states().iter().all(|&s| s == n || s == n + 1), "N={n}");
        }
    }

    #[test]
    fn init_is_deterministic_and_balanced() {
        let h = Hyperparams { n_classes: 10, clauses_per_class: 100, ..hyper(128) };
        let a = ClauseBank::new(&h, 1000, &mut seeded(42)).unwrap();
        let b = ClauseBank::new(&h, 1000, &mut seeded(42)).unwrap();
        assert_eq!(a, b);
        // 10^6 automata; sd of the fraction is 0.0005.
        let frac = a.total_includes() as f64 / 1_000_000.0;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn init_errors() {
        assert_eq!(ClauseBank::new(&hyper(128), 0, &mut seeded(1)), Err(Error::NoLiterals));
        assert_eq!(ClauseBank::new(&hyper(128), 3, &mut seeded(1)), Err(Error::OddLiteralCount(3)));
        let bad = Hyperparams { clauses_per_class: 3, ..hyper(128) };
        assert!(matches!(ClauseBank::new(&bad, 4, &mut seeded(1)), Err(Error::InvalidHyperparameter(_))));
    }

    #[test]
    fn state_roundtrip_for_odd_n() {
        let mut bank = ClauseBank::filled(2, 2, 6, 5, 1).unwrap();
        for s in 1..=10 {
            bank.set_state(1, 1, 3, s);
            assert_eq!(bank.state(1, 1, 3), s);
            assert_eq!(bank.is_included(1, 1, 3), s >= 6);
        }
        assert_eq!(bank.state(1, 1, 2), 1);
        assert_eq!(ClauseBank::filled(2, 2, 6, 5, 11), Err(Error::StateOutOfRange { state: 11, max: 10 }));
    }

    fn bank_with_includes(includes: &[usize], n_literals: usize) -> ClauseBank {
        let mut bank = ClauseBank::filled(2, 2, n_literals, 4, 1).unwrap();
        for &k in includes {
            bank.set_state(0, 0, k, 8);
        }
        bank
    }

    #[test]
    fn clause_output_examples() {
        let bank = bank_with_includes(&[0, 2], 4);
        let x = bits::pack(&[true, false, true, false]);
        assert!(bank.clause_output(0, 0, &x, Mode::Infer));
        let x = bits::pack(&[true, false, false, true]);
        assert!(!bank.clause_output(0, 0, &x, Mode::Train));
        assert!(!bank.clause_output(0, 1, &x, Mode::Infer));
        assert!(bank.clause_output(0, 1, &x, Mode::Train));
    }

    #[test]
    fn class_sum_examples() {
        let bank = ClauseBank::filled(2, 6, 4, 4, 1).unwrap();
        let x = bits::pack(&[true, false, true, false]);
        assert_eq!(bank.class_sum(0, &x, Mode::Train), 0);
        assert_eq!(bank.class_sum(0, &x, Mode::Infer), 0);

        let mut bank = bank;
        for j in 0..3 {
            bank.set_state(1, j, 0, 5);
        }
        bank.set_state(1, 1, 1, 5);
        assert_eq!(bank.class_sum(1, &x, Mode::Infer), 2);
    }

    #[test]
    fn prediction_tie_break() {
        assert_eq!(Prediction::from_sums(vec![5, 5, 3]).predicted, 0);
        assert_eq!(Prediction::from_sums(vec![-2, 7]).predicted, 1);
        assert_eq!(Prediction::from_sums(vec![-3, -1, -1]).predicted, 1);
    }

    #[test]
    fn bank_dump_roundtrip() {
        let bank = ClauseBank::new(&hyper(5), 70, &mut seeded(4)).unwrap();
        let bytes = bank.to_bytes();
        assert_eq!(bytes.len(), BANK_HEADER_LEN + 2 * 2 * 4 * 70);
        assert_eq!(ClauseBank::from_bytes(&bytes).unwrap(), bank);
        let mut bad = bytes.clone();
        bad[BANK_HEADER_LEN] = 0;
        bad[BANK_HEADER_LEN + 1] = 0;
        assert_eq!(ClauseBank::from_bytes(&bad), Err(DecodeError::StateOutOfRange { state: 0, max: 10 }));
        assert!(matches!(ClauseBank::from_bytes(&bytes[..30]), Err(DecodeError::Truncated { .. })));
    }

    #[test]
    fn sliced_arithmetic_saturates() {
        for n in [1u32, 3, 4, 128] {
            let mut bank = ClauseBank::filled(2, 2, 2, n, 1).unwrap();
            let max = 2 * n;
            for expected in (2..=max).chain([max, max]) {
                bank.clause_mut(0, 0).increment(0, 0b1);
                assert_eq!(bank.state(0, 0, 0), expected, "N={n}");
            }
            assert_eq!(bank.state(0, 0, 1), 1);
            for expected in (1..max).rev().chain([1, 1]) {
                bank.clause_mut(0, 0).decrement(0, 0b1);
                assert_eq!(bank.state(0, 0, 0), expected, "N={n}");
            }
            bank.set_state(0, 0, 1, max);
            bank.clause_mut(0, 0).subtract(0, 0b10, n);
            assert_eq!(bank.state(0, 0, 1), n);
            assert_eq!(bank.state(0, 0, 0), 1);
        }
    }
}
