//! Include-only model: for every clause, the ascending list of literal
//! indices it includes. Polarity is positional (first half of each class's
//! clauses positive), so it is not stored.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! "ETHL" | version u8 = 1 | n_classes u16 | clauses_per_class u16 | n_literals u32
//! then per class, per clause: include_count u16 | include_count x u32 index
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::bank::{polarity, ClauseBank, Prediction};
use crate::bits;
use crate::codec::Reader;
use crate::{DecodeError, Error, Result};

pub const MAGIC: &[u8; 4] = b"ETHL";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 13;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseModel {
    n_classes: usize,
    clauses_per_class: usize,
    n_literals: u32,
    /// CSR offsets into `literals`, one entry per clause plus a terminator.
    offsets: Vec<u32>,
    literals: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMetrics {
    pub includes_per_clause: f64,
    /// Length of the serialized model.
    pub size_bytes: usize,
    /// Literal look-ups per inference: one per stored include.
    pub literal_reads: usize,
}

/// Keeps only included literals (state >= N + 1).
pub fn compress(bank: &ClauseBank) -> SparseModel {
    let n_clauses = bank.n_classes() * bank.clauses_per_class();
    let mut offsets = Vec::with_capacity(n_clauses + 1);
    let mut literals = Vec::with_capacity(bank.total_includes());
    offsets.push(0);
    for c in 0..bank.n_classes() {
        for j in 0..bank.clauses_per_class() {
            literals.extend(bank.included_literals(c, j).map(|k| k as u32));
            offsets.push(literals.len() as u32);
        }
    }
    SparseModel {
        n_classes: bank.n_classes(),
        clauses_per_class: bank.clauses_per_class(),
        n_literals: bank.n_literals() as u32,
        offsets,
        literals,
    }
}

impl SparseModel {
    /// Builds a model from explicit include lists laid out `[class][clause]`.
    pub fn from_clauses<L: AsRef<[u32]>>(
        n_classes: usize,
        clauses_per_class: usize,
        n_literals: u32,
        clauses: &[L],
    ) -> core::result::Result<Self, DecodeError> {
        check_dimensions(n_classes, clauses_per_class)?;
        if clauses.len() != n_classes * clauses_per_class {
            return Err(DecodeError::InvalidHeader("clause list length does not match dimensions"));
        }
        let mut model = Self {
            n_classes,
            clauses_per_class,
            n_literals,
            offsets: vec![0],
            literals: Vec::new(),
        };
        for (i, list) in clauses.iter().enumerate() {
            let list = list.as_ref();
            if list.len() > usize::from(u16::MAX) {
                return Err(DecodeError::InvalidHeader("clause has more than 65535 includes"));
            }
            check_clause(list, n_literals, i / clauses_per_class, i % clauses_per_class)?;
            model.literals.extend_from_slice(list);
            model.offsets.push(model.literals.len() as u32);
        }
        Ok(model)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn clauses_per_class(&self) -> usize {
        self.clauses_per_class
    }

    pub fn n_literals(&self) -> usize {
        self.n_literals as usize
    }

    pub fn clause(&self, class: usize, clause: usize) -> &[u32] {
        let i = class * self.clauses_per_class + clause;
        &self.literals[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn total_includes(&self) -> usize {
        self.literals.len()
    }

    pub fn serialized_len(&self) -> usize {
        HEADER_LEN + 2 * self.n_classes * self.clauses_per_class + 4 * self.literals.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.n_classes as u16).to_le_bytes());
        out.extend_from_slice(&(self.clauses_per_class as u16).to_le_bytes());
        out.extend_from_slice(&self.n_literals.to_le_bytes());
        for w in self.offsets.windows(2) {
            let list = &self.literals[w[0] as usize..w[1] as usize];
            out.extend_from_slice(&(list.len() as u16).to_le_bytes());
            for &k in list {
                out.extend_from_slice(&k.to_le_bytes());
            }
        }
        out
    }

    /// Decodes a model, rejecting anything but the canonical encoding of a
    /// valid model.
    pub fn from_bytes(bytes: &[u8]) -> core::result::Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(DecodeError::UnsupportedVersion(version));
        }
        let n_classes = usize::from(r.u16()?);
        let clauses_per_class = usize::from(r.u16()?);
        let n_literals = r.u32()?;
        check_dimensions(n_classes, clauses_per_class)?;
        let n_clauses = n_classes * clauses_per_class;
        let mut offsets = Vec::with_capacity(n_clauses + 1);
        let mut literals = Vec::new();
        offsets.push(0);
        for i in 0..n_clauses {
            let count = usize::from(r.u16()?);
            let raw = r.take(4 * count)?;
            let start = literals.len();
            literals.extend(raw.chunks_exact(4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]])));
            check_clause(&literals[start..], n_literals, i / clauses_per_class, i % clauses_per_class)?;
            offsets.push(literals.len() as u32);
        }
        r.finish()?;
        Ok(Self { n_classes, clauses_per_class, n_literals, offsets, literals })
    }

    /// Inference-mode class sums; a clause with no includes outputs 0.
    pub fn class_sums_into(&self, literals: &[u64], out: &mut [i32]) {
        for (c, sum) in out.iter_mut().enumerate().take(self.n_classes) {
            *sum = (0..self.clauses_per_class)
                .filter(|&j| {
                    let list = self.clause(c, j);
                    !list.is_empty() && list.iter().all(|&k| bits::get(literals, k as usize))
                })
                .map(|j| polarity(j, self.clauses_per_class))
                .sum();
        }
    }

    pub fn check_literals(&self, literals: &[u64]) -> Result<()> {
        let expected = bits::words_for(self.n_literals());
        if literals.len() != expected {
            return Err(Error::WordCountMismatch { expected, found: literals.len() });
        }
        Ok(())
    }

    pub fn metrics(&self) -> ModelMetrics {
        ModelMetrics {
            includes_per_clause: self.literals.len() as f64 / (self.n_classes * self.clauses_per_class) as f64,
            size_bytes: self.serialized_len(),
            literal_reads: self.literals.len(),
        }
    }
}

fn check_dimensions(n_classes: usize, clauses_per_class: usize) -> core::result::Result<(), DecodeError> {
    if n_classes == 0 || n_classes > usize::from(u16::MAX) {
        return Err(DecodeError::InvalidHeader("class count must be in [1, 65535]"));
    }
    if clauses_per_class == 0 || !clauses_per_class.is_multiple_of(2) || clauses_per_class > usize::from(u16::MAX) {
        return Err(DecodeError::InvalidHeader("clauses per class must be even and non-zero"));
    }
    Ok(())
}

fn check_clause(list: &[u32], n_literals: u32, class: usize, clause: usize) -> core::result::Result<(), DecodeError> {
    if let Some(position) = list.windows(2).position(|w| w[0] >= w[1]) {
        return Err(DecodeError::NonAscending { class, clause, position: position + 1 });
    }
    match list.last() {
        Some(&index) if index >= n_literals => Err(DecodeError::IndexOutOfRange { class, clause, index, n_literals }),
        _ => Ok(()),
    }
}

pub fn serialize(model: &SparseModel) -> Vec<u8> {
    model.to_bytes()
}

pub fn deserialize(bytes: &[u8]) -> core::result::Result<SparseModel, DecodeError> {
    SparseModel::from_bytes(bytes)
}

/// Prediction computed by walking the include lists only.
pub fn sparse_infer(model: &SparseModel, literals: &[u64]) -> Result<Prediction> {
    model.check_literals(literals)?;
    let mut sums = vec![0; model.n_classes];
    model.class_sums_into(literals, &mut sums);
    Ok(Prediction::from_sums(sums))
}

pub fn model_metrics(model: &SparseModel) -> ModelMetrics {
    model.metrics()
}
