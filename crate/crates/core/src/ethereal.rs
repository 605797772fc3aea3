//! Shared-literal exclusion and the interleaved training schedule.
//!
//! A literal included by at least one positive and at least one negative
//! clause of the same class is pushed out of every clause of that class that
//! includes it by lowering its automaton state by `N`. A strong include
//! (state near `2N`) lands just below the boundary and can come back under
//! further training; a weak include lands near the bottom.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::bank::{ClauseBank, Hyperparams};
use crate::bits;
use crate::booleanizer::LiteralMatrix;
use crate::eval::accuracy;
use crate::feedback::{check_compatible, train_epoch};
use crate::{Error, Result};

fn polarity_masks(bank: &ClauseBank, class: usize) -> (Vec<u64>, Vec<u64>) {
    let mut positive = vec![0u64; bank.words()];
    let mut negative = vec![0u64; bank.words()];
    for j in 0..bank.clauses_per_class() {
        let target = if bank.polarity(j) > 0 { &mut positive } else { &mut negative };
        for (t, &w) in target.iter_mut().zip(bank.include_words(class, j)) {
            *t |= w;
        }
    }
    (positive, negative)
}

fn shared_mask(bank: &ClauseBank, class: usize) -> Vec<u64> {
    let (mut positive, negative) = polarity_masks(bank, class);
    for (p, n) in positive.iter_mut().zip(&negative) {
        *p &= n;
    }
    positive
}

/// Literals of `class` included by both a positive and a negative clause,
/// ascending.
pub fn shared_literals(bank: &ClauseBank, class: usize) -> Vec<usize> {
    bits::ones(&shared_mask(bank, class)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExclusionCount {
    /// Distinct shared literals found in the class.
    pub literals: usize,
    /// Automata whose state was lowered.
    pub automata: usize,
}

/// Excludes every shared literal of every class; returns per-class counts.
pub fn exclude_shared(bank: &mut ClauseBank) -> Vec<ExclusionCount> {
    let n = bank.half_states();
    (0..bank.n_classes())
        .map(|class| {
            let shared = shared_mask(bank, class);
            let mut count = ExclusionCount { literals: bits::count_ones(&shared), automata: 0 };
            if count.literals == 0 {
                return count;
            }
            for j in 0..bank.clauses_per_class() {
                let mut states = bank.clause_mut(class, j);
                for (w, &s) in shared.iter().enumerate() {
                    let mask = states.include_word(w) & s;
                    if mask != 0 {
                        count.automata += mask.count_ones() as usize;
                        states.subtract(w, mask, n);
                    }
                }
            }
            count
        })
        .collect()
}

/// When to run exclusions: after epoch `warmup_epochs`, then after every
/// `interval` further epochs, never after the final epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExclusionSchedule {
    pub warmup_epochs: u32,
    pub interval: u32,
    pub total_epochs: u32,
}

impl ExclusionSchedule {
    pub fn new(warmup_epochs: u32, interval: u32, total_epochs: u32) -> Result<Self> {
        if total_epochs == 0 {
            return Err(Error::InvalidSchedule("total epochs must be at least 1"));
        }
        if warmup_epochs == 0 {
            return Err(Error::InvalidSchedule("warmup must be at least 1 epoch"));
        }
        if interval == 0 {
            return Err(Error::InvalidSchedule("interval must be at least 1 epoch"));
        }
        if warmup_epochs >= total_epochs {
            return Err(Error::InvalidSchedule("warmup leaves no epoch for an exclusion"));
        }
        Ok(Self { warmup_epochs, interval, total_epochs })
    }

    /// Plain training with no exclusion step.
    pub fn vanilla(total_epochs: u32) -> Self {
        Self { warmup_epochs: total_epochs, interval: total_epochs.max(1), total_epochs }
    }

    pub fn compresses(&self) -> bool {
        self.warmup_epochs < self.total_epochs
    }

    /// Whether an exclusion follows training epoch `epoch` (1-based).
    pub fn excludes_after(&self, epoch: u32) -> bool {
        epoch >= self.warmup_epochs && epoch < self.total_epochs && (epoch - self.warmup_epochs).is_multiple_of(self.interval)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    AfterTraining,
    AfterExclusion,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::AfterTraining => "after-training",
            Phase::AfterExclusion => "after-exclusion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "after-training" => Some(Phase::AfterTraining),
            "after-exclusion" => Some(Phase::AfterExclusion),
            _ => None,
        }
    }
}

impl core::fmt::Display for Phase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub epoch: u32,
    pub phase: Phase,
    pub test_accuracy: f64,
    pub includes_per_clause: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestSnapshot {
    pub epoch: u32,
    pub accuracy: f64,
    pub includes_per_clause: f64,
    pub bank: ClauseBank,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
    /// Most accurate after-training state; the earliest wins ties.
    pub best: Option<BestSnapshot>,
}

impl TrainingTrace {
    fn push(&mut self, record: TraceRecord, bank: &ClauseBank) {
        let improves = self.best.as_ref().is_none_or(|b| record.test_accuracy > b.accuracy);
        if record.phase == Phase::AfterTraining && improves {
            self.best = Some(BestSnapshot {
                epoch: record.epoch,
                accuracy: record.test_accuracy,
                includes_per_clause: record.includes_per_clause,
                bank: bank.clone(),
            });
        }
        self.records.push(record);
    }
}

/// [`ethereal_train_with`] without a progress callback.
pub fn ethereal_train<R: Rng + ?Sized>(
    train: &LiteralMatrix,
    eval: &LiteralMatrix,
    hyper: &Hyperparams,
    schedule: &ExclusionSchedule,
    rng: &mut R,
) -> Result<(ClauseBank, TrainingTrace)> {
    ethereal_train_with(train, eval, hyper, schedule, rng, |_| {})
}

/// Trains a fresh bank for `schedule.total_epochs` epochs, interleaving
/// exclusions per the schedule. Accuracy in the trace is measured on `eval`
/// after every epoch and after every exclusion; `observe` sees each record
/// as it is produced.
pub fn ethereal_train_with<R: Rng + ?Sized>(
    train: &LiteralMatrix,
    eval: &LiteralMatrix,
    hyper: &Hyperparams,
    schedule: &ExclusionSchedule,
    rng: &mut R,
    mut observe: impl FnMut(&TraceRecord),
) -> Result<(ClauseBank, TrainingTrace)> {
    if schedule.total_epochs != hyper.epochs {
        return Err(Error::InvalidSchedule("schedule length differs from the configured epoch count"));
    }
    if train.is_empty() || eval.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut bank = ClauseBank::new(hyper, train.n_literals(), rng)?;
    check_compatible(&bank, train)?;
    check_compatible(&bank, eval)?;
    let mut trace = TrainingTrace::default();
    for epoch in 1..=schedule.total_epochs {
        let stats = train_epoch(&mut bank, train, hyper, rng)?;
        let record = TraceRecord {
            epoch,
            phase: Phase::AfterTraining,
            test_accuracy: accuracy(&bank, eval)?,
            includes_per_clause: stats.includes_per_clause,
        };
        observe(&record);
        trace.push(record, &bank);
        if schedule.excludes_after(epoch) {
            exclude_shared(&mut bank);
            let record = TraceRecord {
                epoch,
                phase: Phase::AfterExclusion,
                test_accuracy: accuracy(&bank, eval)?,
                includes_per_clause: bank.includes_per_clause(),
            };
            observe(&record);
            trace.push(record, &bank);
        }
    }
    Ok((bank, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn shared_literal_examples() {
        let mut bank = ClauseBank::filled(2, 4, 6, 4, 1).unwrap();
        bank.set_state(0, 0, 3, 6); // positive clause 0
        bank.set_state(0, 3, 3, 5); // negative clause 3
        bank.set_state(0, 1, 4, 8); // positive only
        bank.set_state(1, 2, 4, 8); // negative in another class
        assert_eq!(shared_literals(&bank, 0), vec![3]);
        assert!(shared_literals(&bank, 1).is_empty());
    }

    #[test]
    fn exclusion_arithmetic() {
        let n = 128;
        let mut bank = ClauseBank::filled(2, 4, 6, n, 1).unwrap();
        for (j, state) in [(0, 130), (1, 129), (2, 256), (3, 200)] {
            bank.set_state(0, j, 0, state);
        }
        bank.set_state(0, 1, 1, 250);
        let counts = exclude_shared(&mut bank);
        assert_eq!(counts[0], ExclusionCount { literals: 1, automata: 4 });
        assert_eq!(counts[1], ExclusionCount::default());
        assert_eq!(bank.state(0, 0, 0), 2);
        assert_eq!(bank.state(0, 1, 0), 1);
        assert_eq!(bank.state(0, 2, 0), 128);
        assert_eq!(bank.state(0, 3, 0), 72);
        assert_eq!(bank.state(0, 1, 1), 250);
    }

    #[test]
    fn exclusion_only_touches_including_clauses() {
        let mut bank = ClauseBank::filled(2, 4, 4, 4, 3).unwrap();
        bank.set_state(0, 0, 2, 7);
        bank.set_state(0, 2, 2, 5);
        bank.set_state(0, 3, 2, 4);
        exclude_shared(&mut bank);
        assert_eq!(bank.state(0, 0, 2), 3);
        assert_eq!(bank.state(0, 2, 2), 1);
        assert_eq!(bank.state(0, 3, 2), 4);
        assert_eq!(bank.state(0, 1, 2), 3);
    }

    #[test]
    fn schedule_positions() {
        let s = ExclusionSchedule::new(1, 1, 5).unwrap();
        let after: Vec<u32> = (1..=5).filter(|&e| s.excludes_after(e)).collect();
        assert_eq!(after, vec![1, 2, 3, 4]);
        let s = ExclusionSchedule::new(3, 2, 10).unwrap();
        let after: Vec<u32> = (1..=10).filter(|&e| s.excludes_after(e)).collect();
        assert_eq!(after, vec![3, 5, 7, 9]);
        let v = ExclusionSchedule::vanilla(10);
        assert!(!v.compresses());
        assert!((1..=10).all(|e| !v.excludes_after(e)));
        assert!(ExclusionSchedule::new(0, 1, 5).is_err());
        assert!(ExclusionSchedule::new(1, 0, 5).is_err());
        assert!(ExclusionSchedule::new(5, 1, 5).is_err());
    }

    fn toy_data(seed: u64, n: usize) -> LiteralMatrix {
        let mut rng = seeded(seed);
        let mut data = LiteralMatrix::new(6, 3).unwrap();
        for _ in 0..n {
            let f: Vec<bool> = (0..6).map(|_| rng.random()).collect();
            let label = if f[0] && f[1] { 0 } else if f[2] { 1 } else { 2 };
            data.push_features(&f, label).unwrap();
        }
        data
    }

    #[test]
    fn vanilla_schedule_matches_plain_training() {
        let data = toy_data(1, 200);
        let h = Hyperparams { seed: 5, epochs: 6, ..Hyperparams::new(3, 10, 5, 3.0) };
        let (bank, trace) = ethereal_train(&data, &data, &h, &ExclusionSchedule::vanilla(6), &mut h.rng()).unwrap();
        let mut rng = h.rng();
        let mut plain = ClauseBank::new(&h, 12, &mut rng).unwrap();
        for record in &trace.records {
            let stats = train_epoch(&mut plain, &data, &h, &mut rng).unwrap();
            assert_eq!(record.phase, Phase::AfterTraining);
            assert_eq!(record.includes_per_clause, stats.includes_per_clause);
            assert_eq!(record.test_accuracy, accuracy(&plain, &data).unwrap());
        }
        assert_eq!(bank, plain);
        assert_eq!(trace.records.len(), 6);
    }

    #[test]
    fn ethereal_trace_alternates_and_tracks_best() {
        let data = toy_data(2, 300);
        let h = Hyperparams { seed: 9, epochs: 8, ..Hyperparams::new(3, 10, 5, 3.0) };
        let schedule = ExclusionSchedule::new(2, 2, 8).unwrap();
        let mut seen = 0;
        let (_, trace) = ethereal_train_with(&data, &data, &h, &schedule, &mut h.rng(), |_| seen += 1).unwrap();
        let phases: Vec<(u32, Phase)> = trace.records.iter().map(|r| (r.epoch, r.phase)).collect();
        use Phase::*;
        assert_eq!(
            phases,
            vec![
                (1, AfterTraining),
                (2, AfterTraining),
                (2, AfterExclusion),
                (3, AfterTraining),
                (4, AfterTraining),
                (4, AfterExclusion),
                (5, AfterTraining),
                (6, AfterTraining),
                (6, AfterExclusion),
                (7, AfterTraining),
                (8, AfterTraining),
            ]
        );
        assert_eq!(seen, trace.records.len());
        let best = trace.best.unwrap();
        let max = trace
            .records
            .iter()
            .filter(|r| r.phase == AfterTraining)
            .map(|r| r.test_accuracy)
            .fold(0.0, f64::max);
        assert_eq!(best.accuracy, max);
        assert_eq!(accuracy(&best.bank, &data).unwrap(), best.accuracy);
        for w in trace.records.windows(2) {
            if w[1].phase == AfterExclusion {
                assert!(w[1].includes_per_clause <= w[0].includes_per_clause);
            }
        }
    }

    #[test]
    fn schedule_must_match_hyperparams() {
        let data = toy_data(3, 20);
        let h = Hyperparams { epochs: 3, ..Hyperparams::new(3, 4, 5, 3.0) };
        let schedule = ExclusionSchedule::vanilla(4);
        assert!(matches!(
            ethereal_train(&data, &data, &h, &schedule, &mut h.rng()),
            Err(Error::InvalidSchedule(_))
        ));
    }
}
