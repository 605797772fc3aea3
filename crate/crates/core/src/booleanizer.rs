//! Raw features to Boolean literals: quantile thresholds with thermometer or
//! one-hot encoding, or a fixed grayscale cut. Every emitted row carries the
//! feature bits followed by their complements.

use alloc::vec::Vec;

use crate::bits;
use crate::{Error, Result};

/// Real-valued samples with integer class labels, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    n_features: usize,
    n_classes: usize,
    values: Vec<f64>,
    labels: Vec<u32>,
}

impl RawDataset {
    pub fn new(n_features: usize, n_classes: usize, values: Vec<f64>, labels: Vec<u32>) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        if values.len() != n_features * labels.len() {
            return Err(Error::FeatureCountMismatch {
                expected: n_features * labels.len(),
                found: values.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l as usize >= n_classes) {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        Ok(Self { n_features, n_classes, values, labels })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: Vec<u32>, n_classes: usize) -> Result<Self> {
        let n_features = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n_features * rows.len());
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_features {
                return Err(Error::RaggedRow { row, expected: n_features, found: r.len() });
            }
            values.extend_from_slice(r);
        }
        if labels.len() != rows.len() {
            return Err(Error::FeatureCountMismatch { expected: rows.len(), found: labels.len() });
        }
        Self::new(n_features, n_classes, values, labels)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Keeps the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n_features: self.n_features,
            n_classes: self.n_classes,
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::NonFinite { row: p / self.n_features, col: p % self.n_features }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// One bit per threshold: `value >= t`.
    Thermometer,
    /// One bit per bin `(-inf, t1), [t1, t2), ..., [t_last, inf)`.
    OneHot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinningSpec {
    pub encoding: Encoding,
    pub n_bins: usize,
    /// Per feature, strictly increasing.
    pub thresholds: Vec<Vec<f64>>,
}

impl BinningSpec {
    /// Boolean bits emitted for feature `f`. Constant features emit none.
    pub fn group_width(&self, f: usize) -> usize {
        let t = self.thresholds[f].len();
        match self.encoding {
            Encoding::Thermometer => t,
            Encoding::OneHot if t == 0 => 0,
            Encoding::OneHot => t + 1,
        }
    }

    pub fn n_boolean_features(&self) -> usize {
        (0..self.thresholds.len()).map(|f| self.group_width(f)).sum()
    }

    pub fn n_literals(&self) -> usize {
        2 * self.n_boolean_features()
    }
}

/// Boolean literal rows: `F` feature bits followed by their `F` complements,
/// bit-packed into `u64` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralMatrix {
    n_literals: usize,
    n_classes: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    labels: Vec<u32>,
}

impl LiteralMatrix {
    /// An empty matrix for rows of `n_features` Boolean features.
    pub fn new(n_features: usize, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        let n_literals = 2 * n_features;
        Ok(Self {
            n_literals,
            n_classes,
            words_per_row: bits::words_for(n_literals),
            bits: Vec::new(),
            labels: Vec::new(),
        })
    }

    /// Appends a sample given its feature bits; complements are derived.
    pub fn push_features(&mut self, features: &[bool], label: u32) -> Result<()> {
        let f = self.n_features();
        if features.len() != f {
            return Err(Error::FeatureCountMismatch { expected: f, found: features.len() });
        }
        self.check_label(label)?;
        let start = self.bits.len();
        self.bits.resize(start + self.words_per_row, 0);
        let row = &mut self.bits[start..];
        for (k, &b) in features.iter().enumerate() {
            bits::set(row, if b { k } else { k + f }, true);
        }
        self.labels.push(label);
        Ok(())
    }

    /// Appends a full literal row, which must satisfy complement pairing.
    pub fn push_literals(&mut self, literals: &[bool], label: u32) -> Result<()> {
        if literals.len() != self.n_literals {
            return Err(Error::LiteralCountMismatch { expected: self.n_literals, found: literals.len() });
        }
        let f = self.n_features();
        if let Some(feature) = (0..f).find(|&k| literals[k] == literals[k + f]) {
            return Err(Error::ComplementMismatch { row: self.labels.len(), feature });
        }
        self.push_features(&literals[..f], label)
    }

    fn check_label(&self, label: u32) -> Result<()> {
        if label as usize >= self.n_classes {
            return Err(Error::LabelOutOfRange { label, n_classes: self.n_classes });
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_literals(&self) -> usize {
        self.n_literals
    }

    pub fn n_features(&self) -> usize {
        self.n_literals / 2
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    /// Packed literal words of sample `i`.
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn literal(&self, i: usize, k: usize) -> bool {
        bits::get(self.row(i), k)
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u64], u32)> + '_ {
        (0..self.n_samples()).map(move |i| (self.row(i), self.labels[i]))
    }

    /// Keeps the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut bits = Vec::with_capacity(indices.len() * self.words_per_row);
        for &i in indices {
            bits.extend_from_slice(self.row(i));
        }
        Self {
            bits,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ..*self
        }
    }
}

/// Quantile thresholds at `k / n_bins` for `k = 1..n_bins`, linearly
/// interpolated between order statistics.
///
/// Thresholds that repeat, or that do not exceed the feature's minimum (and so
/// would produce a constant bit), are dropped; a constant feature gets none.
pub fn fit_quantile_bins(raw: &RawDataset, n_bins: usize, encoding: Encoding) -> Result<BinningSpec> {
    if n_bins < 2 {
        return Err(Error::TooFewBins(n_bins));
    }
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    raw.check_finite()?;
    let n = raw.n_samples();
    let mut column = Vec::with_capacity(n);
    let thresholds = (0..raw.n_features())
        .map(|f| {
            column.clear();
            column.extend((0..n).map(|i| raw.row(i)[f]));
            column.sort_by(f64::total_cmp);
            let min = column[0];
            let mut kept: Vec<f64> = Vec::new();
            for k in 1..n_bins {
                let q = quantile_sorted(&column, k, n_bins);
                if q > min && kept.last().is_none_or(|&last| q > last) {
                    kept.push(q);
                }
            }
            kept
        })
        .collect();
    Ok(BinningSpec { encoding, n_bins, thresholds })
}

/// The `k / n`-quantile of ascending `sorted`, position `(len - 1) * k / n`.
fn quantile_sorted(sorted: &[f64], k: usize, n: usize) -> f64 {
    let scaled = (sorted.len() - 1) * k;
    let lo = scaled / n;
    let frac = (scaled % n) as f64 / n as f64;
    match sorted.get(lo + 1) {
        Some(&hi) if frac > 0.0 => sorted[lo] + frac * (hi - sorted[lo]),
        _ => sorted[lo],
    }
}

pub fn booleanize(raw: &RawDataset, spec: &BinningSpec) -> Result<LiteralMatrix> {
    if spec.thresholds.len() != raw.n_features() {
        return Err(Error::FeatureCountMismatch { expected: spec.thresholds.len(), found: raw.n_features() });
    }
    raw.check_finite()?;
    let mut out = LiteralMatrix::new(spec.n_boolean_features(), raw.n_classes())?;
    let mut features = Vec::with_capacity(out.n_features());
    for i in 0..raw.n_samples() {
        features.clear();
        for (f, &value) in raw.row(i).iter().enumerate() {
            encode_value(value, &spec.thresholds[f], spec.encoding, &mut features);
        }
        out.push_features(&features, raw.labels()[i])?;
    }
    Ok(out)
}

fn encode_value(value: f64, thresholds: &[f64], encoding: Encoding, out: &mut Vec<bool>) {
    match encoding {
        Encoding::Thermometer => out.extend(thresholds.iter().map(|&t| value >= t)),
        Encoding::OneHot if thresholds.is_empty() => {}
        Encoding::OneHot => {
            let bin = thresholds.iter().take_while(|&&t| value >= t).count();
            out.extend((0..=thresholds.len()).map(|b| b == bin));
        }
    }
}

/// One Boolean feature per pixel: `pixel >= threshold`.
pub fn booleanize_grayscale(images: &RawDataset, threshold: f64) -> Result<LiteralMatrix> {
    let mut out = LiteralMatrix::new(images.n_features(), images.n_classes())?;
    let mut features = Vec::with_capacity(images.n_features());
    for i in 0..images.n_samples() {
        features.clear();
        features.extend(images.row(i).iter().map(|&p| p >= threshold));
        out.push_features(&features, images.labels()[i])?;
    }
    Ok(out)
}
