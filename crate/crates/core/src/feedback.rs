//! Feedback gating, Type I / Type II reinforcement and epoch training.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bank::{ClauseBank, Hyperparams, Mode};
use crate::booleanizer::LiteralMatrix;
use crate::rng::BernoulliMask;
use crate::{Error, Result};

/// Probability of giving feedback to a clause of a class whose sum is
/// `class_sum`: `(T + (-1)^y * clip(class_sum, -T, T)) / 2T`.
pub fn feedback_probability(class_sum: i32, y: bool, threshold: u32) -> f64 {
    let t = i64::from(threshold);
    f64::from(feedback_numerator(class_sum, y, threshold)) / (2 * t) as f64
}

/// Numerator of [`feedback_probability`] over the denominator `2T`.
#[inline]
fn feedback_numerator(class_sum: i32, y: bool, threshold: u32) -> u32 {
    let t = i64::from(threshold);
    let clipped = i64::from(class_sum).clamp(-t, t);
    let signed = if y { -clipped } else { clipped };
    (t + signed) as u32
}

/// Per-automaton randomness of Type I feedback: an event of probability `1/s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Specificity {
    mask: BernoulliMask,
    boost: bool,
}

impl Specificity {
    pub fn new(s: f64) -> Self {
        Self { mask: BernoulliMask::new(1.0 / s), boost: false }
    }

    /// With boost on, matched literals of a firing clause always step
    /// towards include instead of with probability `(s-1)/s`.
    pub fn boosted(self, boost: bool) -> Self {
        Self { boost, ..self }
    }

    pub fn for_hyper(hyper: &Hyperparams) -> Self {
        Self::new(hyper.specificity).boosted(hyper.boost_true_positive)
    }

    pub fn inverse(&self) -> f64 {
        self.mask.probability()
    }
}

/// Type I feedback, which fights false negatives.
///
/// If the clause outputs 1, literals equal to 1 step towards include with
/// probability `(s-1)/s` and literals equal to 0 step towards exclude with
/// probability `1/s`. If it outputs 0, every automaton steps towards exclude
/// with probability `1/s`.
pub fn apply_type_i<R: Rng + ?Sized>(
    bank: &mut ClauseBank,
    class: usize,
    clause: usize,
    literals: &[u64],
    specificity: &Specificity,
    rng: &mut R,
) {
    let output = bank.clause_output(class, clause, literals, Mode::Train);
    let mut states = bank.clause_mut(class, clause);
    for (w, &x) in literals.iter().enumerate().take(states.words()) {
        let valid = states.valid_mask(w);
        let low = specificity.mask.sample(rng) & valid;
        if output {
            let up = if specificity.boost { x } else { x & !low };
            states.increment(w, up & valid);
            states.decrement(w, !x & low);
        } else {
            states.decrement(w, low);
        }
    }
}

/// Type II feedback, which fights false positives: a clause outputting 1
/// moves every automaton of a 0-valued literal one step towards include.
pub fn apply_type_ii(bank: &mut ClauseBank, class: usize, clause: usize, literals: &[u64]) {
    if !bank.clause_output(class, clause, literals, Mode::Train) {
        return;
    }
    let mut states = bank.clause_mut(class, clause);
    for (w, &x) in literals.iter().enumerate().take(states.words()) {
        let valid = states.valid_mask(w);
        states.increment(w, !x & valid);
    }
}

/// Feedback for one class: `y` says whether the sample belongs to it.
///
/// The class sum is taken once before any update; each clause is then gated
/// independently with probability [`feedback_probability`].
pub fn update_class<R: Rng + ?Sized>(
    bank: &mut ClauseBank,
    class: usize,
    y: bool,
    literals: &[u64],
    threshold: u32,
    specificity: &Specificity,
    rng: &mut R,
) {
    let sum = bank.class_sum(class, literals, Mode::Train);
    let numerator = feedback_numerator(sum, y, threshold);
    if numerator == 0 {
        return;
    }
    let denominator = 2 * threshold;
    for clause in 0..bank.clauses_per_class() {
        if numerator < denominator && rng.random_range(0..denominator) >= numerator {
            continue;
        }
        if (bank.polarity(clause) > 0) == y {
            apply_type_i(bank, class, clause, literals, specificity, rng);
        } else {
            apply_type_ii(bank, class, clause, literals);
        }
    }
}

/// Trains on one sample: the labelled class gets `y = 1` feedback and one
/// uniformly drawn other class gets `y = 0` feedback.
pub fn train_datapoint<R: Rng + ?Sized>(
    bank: &mut ClauseBank,
    literals: &[u64],
    label: u32,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<()> {
    let n_classes = bank.n_classes();
    let target = label as usize;
    if target >= n_classes {
        return Err(Error::LabelOutOfRange { label, n_classes });
    }
    let specificity = Specificity::for_hyper(hyper);
    let other = match rng.random_range(0..n_classes - 1) {
        c if c >= target => c + 1,
        c => c,
    };
    update_class(bank, target, true, literals, hyper.threshold, &specificity, rng);
    update_class(bank, other, false, literals, hyper.threshold, &specificity, rng);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub includes_per_clause: f64,
    /// Fraction of samples predicted correctly just before training on them.
    pub train_accuracy: f64,
}

pub(crate) fn check_compatible(bank: &ClauseBank, data: &LiteralMatrix) -> Result<()> {
    if data.n_literals() != bank.n_literals() {
        return Err(Error::LiteralCountMismatch { expected: bank.n_literals(), found: data.n_literals() });
    }
    if data.n_classes() > bank.n_classes() {
        return Err(Error::ClassCountMismatch { expected: bank.n_classes(), found: data.n_classes() });
    }
    Ok(())
}

/// One pass over `data` in a freshly shuffled order.
pub fn train_epoch<R: Rng + ?Sized>(
    bank: &mut ClauseBank,
    data: &LiteralMatrix,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<EpochStats> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_compatible(bank, data)?;
    let mut order: Vec<usize> = (0..data.n_samples()).collect();
    order.shuffle(rng);
    let mut sums = alloc::vec![0; bank.n_classes()];
    let mut correct = 0usize;
    for i in order {
        let (literals, label) = (data.row(i), data.label(i));
        bank.class_sums_into(literals, Mode::Infer, &mut sums);
        if crate::bank::argmax(&sums) == label as usize {
            correct += 1;
        }
        train_datapoint(bank, literals, label, hyper, rng)?;
    }
    Ok(EpochStats {
        includes_per_clause: bank.includes_per_clause(),
        train_accuracy: correct as f64 / data.n_samples() as f64,
    })
}
