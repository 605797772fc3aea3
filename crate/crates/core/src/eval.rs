//! Accuracy, include heatmaps and accuracy/size trade-off points.

use alloc::vec;
use alloc::vec::Vec;

use crate::bank::{ClauseBank, Mode, Prediction};
use crate::booleanizer::LiteralMatrix;
use crate::ethereal::{Phase, TrainingTrace};
use crate::sparse::SparseModel;
use crate::{Error, Result};

/// Anything that produces inference-mode class sums for packed literals.
pub trait Classifier {
    fn n_classes(&self) -> usize;
    fn n_literals(&self) -> usize;
    fn class_sums_into(&self, literals: &[u64], out: &mut [i32]);

    fn predict(&self, literals: &[u64]) -> Prediction {
        let mut sums = vec![0; self.n_classes()];
        self.class_sums_into(literals, &mut sums);
        Prediction::from_sums(sums)
    }
}

impl Classifier for ClauseBank {
    fn n_classes(&self) -> usize {
        ClauseBank::n_classes(self)
    }

    fn n_literals(&self) -> usize {
        ClauseBank::n_literals(self)
    }

    fn class_sums_into(&self, literals: &[u64], out: &mut [i32]) {
        ClauseBank::class_sums_into(self, literals, Mode::Infer, out);
    }
}

impl Classifier for SparseModel {
    fn n_classes(&self) -> usize {
        SparseModel::n_classes(self)
    }

    fn n_literals(&self) -> usize {
        SparseModel::n_literals(self)
    }

    fn class_sums_into(&self, literals: &[u64], out: &mut [i32]) {
        SparseModel::class_sums_into(self, literals, out);
    }
}

/// Predictions for every sample of `data`.
pub fn predict_all<C: Classifier + ?Sized>(model: &C, data: &LiteralMatrix) -> Result<Vec<Prediction>> {
    check(model, data)?;
    Ok(data.iter().map(|(x, _)| model.predict(x)).collect())
}

/// Fraction of samples whose prediction equals the label.
pub fn accuracy<C: Classifier + ?Sized>(model: &C, data: &LiteralMatrix) -> Result<f64> {
    check(model, data)?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sums = vec![0; model.n_classes()];
    let mut correct = 0usize;
    for (x, label) in data.iter() {
        model.class_sums_into(x, &mut sums);
        if crate::bank::argmax(&sums) == label as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.n_samples() as f64)
}

fn check<C: Classifier + ?Sized>(model: &C, data: &LiteralMatrix) -> Result<()> {
    if data.n_literals() != model.n_literals() {
        return Err(Error::LiteralCountMismatch { expected: model.n_literals(), found: data.n_literals() });
    }
    let n_classes = model.n_classes();
    if let Some(&label) = data.labels().iter().find(|&&l| l as usize >= n_classes) {
        return Err(Error::LabelOutOfRange { label, n_classes });
    }
    Ok(())
}

/// Per-literal include counts over the positive and the negative clauses of
/// one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncludeHeatmap {
    pub positive: Vec<u32>,
    pub negative: Vec<u32>,
}

pub fn include_heatmap(bank: &ClauseBank, class: usize) -> IncludeHeatmap {
    let mut map = IncludeHeatmap {
        positive: vec![0; bank.n_literals()],
        negative: vec![0; bank.n_literals()],
    };
    for j in 0..bank.clauses_per_class() {
        let counts = if bank.polarity(j) > 0 { &mut map.positive } else { &mut map.negative };
        for k in bank.included_literals(class, j) {
            counts[k] += 1;
        }
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub epoch: u32,
    pub phase: Phase,
    pub includes_per_clause: f64,
    pub accuracy: f64,
}

/// One (model size, accuracy) point per trace record.
pub fn tradeoff_trace(trace: &TrainingTrace) -> Vec<TradeoffPoint> {
    trace
        .records
        .iter()
        .map(|r| TradeoffPoint {
            epoch: r.epoch,
            phase: r.phase,
            includes_per_clause: r.includes_per_clause,
            accuracy: r.test_accuracy,
        })
        .collect()
}

/// Smallest model size among points reaching at least `min_accuracy`.
pub fn min_includes_at_accuracy(points: &[TradeoffPoint], min_accuracy: f64) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.accuracy >= min_accuracy)
        .map(|p| p.includes_per_clause)
        .min_by(f64::total_cmp)
}
