//! Dataset locations, train/test splitting and the reference training
//! configurations used by the reproduction runs.

use std::path::{Path, PathBuf};

use ethereal_core::booleanizer::{booleanize, booleanize_grayscale, fit_quantile_bins};
use ethereal_core::rng::seeded;
use ethereal_core::{Encoding, Hyperparams, LiteralMatrix, RawDataset};
use rand::seq::SliceRandom;

use crate::formats::{self, Result};

/// `data/` at the workspace root, or `$ETHEREAL_DATA` when set.
pub fn data_dir() -> PathBuf {
    std::env::var_os("ETHEREAL_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Shuffles `0..n` with `seed` and puts the first `round(n * test_fraction)`
/// indices in the test part. Both parts come back ascending.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let mut test = order[..n_test.min(n)].to_vec();
    let mut train = order[n_test.min(n)..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

pub struct Split {
    pub train: LiteralMatrix,
    pub test: LiteralMatrix,
}

pub struct MnistFiles {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl MnistFiles {
    pub fn in_dir(dir: &Path) -> Self {
        let f = |name: &str| dir.join(format!("{name}.gz"));
        Self {
            train_images: f("train-images-idx3-ubyte"),
            train_labels: f("train-labels-idx1-ubyte"),
            test_images: f("t10k-images-idx3-ubyte"),
            test_labels: f("t10k-labels-idx1-ubyte"),
        }
    }

    pub fn exist(&self) -> bool {
        [&self.train_images, &self.train_labels, &self.test_images, &self.test_labels].iter().all(|p| p.is_file())
    }
}

/// MNIST configuration: grayscale threshold 75, 100 clauses per class,
/// `T = 10`, `s = 3`, 50 epochs.
pub struct MnistRecipe {
    pub threshold: f64,
    /// Use only the first `train_limit` training images when set.
    pub train_limit: Option<usize>,
}

impl Default for MnistRecipe {
    fn default() -> Self {
        Self { threshold: 75.0, train_limit: None }
    }
}

impl MnistRecipe {
    pub fn hyperparams(&self, seed: u64) -> Hyperparams {
        Hyperparams { seed, epochs: 50, ..Hyperparams::new(10, 100, 10, 3.0) }
    }

    pub fn load(&self, files: &MnistFiles) -> Result<Split> {
        let train = formats::read_idx(&files.train_images, &files.train_labels)?;
        let test = formats::read_idx(&files.test_images, &files.test_labels)?;
        let train = match self.train_limit {
            Some(n) if n < train.n_samples() => train.select(&(0..n).collect::<Vec<_>>()),
            _ => train,
        };
        Ok(Split {
            train: booleanize_grayscale(&train, self.threshold)?,
            test: booleanize_grayscale(&test, self.threshold)?,
        })
    }
}

/// Mammographic mass configuration: 4-bin quantile thermometer encoding fitted
/// on an 80/20 split, 50 clauses per class, `T = 7`, `s = 3`, 100 epochs.
pub struct MammographicRecipe {
    pub n_bins: usize,
    pub encoding: Encoding,
    pub test_fraction: f64,
    pub split_seed: u64,
}

impl Default for MammographicRecipe {
    fn default() -> Self {
        Self { n_bins: 4, encoding: Encoding::Thermometer, test_fraction: 0.2, split_seed: 2024 }
    }
}

impl MammographicRecipe {
    pub fn hyperparams(&self, seed: u64) -> Hyperparams {
        Hyperparams { seed, epochs: 100, ..Hyperparams::new(2, 50, 7, 3.0) }
    }

    pub fn load(&self, csv: &Path) -> Result<Split> {
        let raw = formats::read_raw_csv(csv, true)?;
        self.prepare(&raw)
    }

    pub fn prepare(&self, raw: &RawDataset) -> Result<Split> {
        let (train_idx, test_idx) = split_indices(raw.n_samples(), self.test_fraction, self.split_seed);
        let (train, test) = (raw.select(&train_idx), raw.select(&test_idx));
        let spec = fit_quantile_bins(&train, self.n_bins, self.encoding)?;
        Ok(Split { train: booleanize(&train, &spec)?, test: booleanize(&test, &spec)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_a_deterministic_partition() {
        let (train, test) = split_indices(101, 0.2, 7);
        assert_eq!(test.len(), 20);
        assert_eq!(train.len(), 81);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        assert_eq!(split_indices(101, 0.2, 7), (train, test));
        assert_ne!(split_indices(101, 0.2, 8).1, split_indices(101, 0.2, 7).1);
    }
}
