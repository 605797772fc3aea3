use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("quantile binning needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("expected {expected} features, got {found}")]
    FeatureCountMismatch { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: u32, n_classes: usize },
    #[error("literal vector has {found} literals, expected {expected}")]
    LiteralCountMismatch { expected: usize, found: usize },
    #[error("packed literal vector has {found} words, expected {expected}")]
    WordCountMismatch { expected: usize, found: usize },
    #[error("odd literal count {0}: literals must come in feature/complement pairs")]
    OddLiteralCount(usize),
    #[error("row {row} breaks complement pairing at feature {feature}")]
    ComplementMismatch { row: usize, feature: usize },
    #[error("no literals to learn from")]
    NoLiterals,
    #[error("too many literals: {0} (at most 65535)")]
    TooManyLiterals(usize),
    #[error("class count mismatch: expected {expected}, got {found}")]
    ClassCountMismatch { expected: usize, found: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(&'static str),
    #[error("invalid exclusion schedule: {0}")]
    InvalidSchedule(&'static str),
    #[error("state table has {found} entries, expected {expected}")]
    StateCountMismatch { expected: usize, found: usize },
    #[error("automaton state {state} outside [1, {max}]")]
    StateOutOfRange { state: u32, max: u32 },
}

/// Failures while decoding a binary model or bank dump.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated input: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated { offset: usize, needed: usize, available: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("invalid header: {0}")]
    InvalidHeader(&'static str),
    #[error("class {class} clause {clause}: literal indices not strictly ascending at position {position}")]
    NonAscending { class: usize, clause: usize, position: usize },
    #[error("class {class} clause {clause}: literal index {index} >= {n_literals}")]
    IndexOutOfRange { class: usize, clause: usize, index: u32, n_literals: u32 },
    #[error("automaton state {state} outside [1, {max}]")]
    StateOutOfRange { state: u32, max: u32 },
}
