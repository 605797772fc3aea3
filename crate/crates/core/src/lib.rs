//! Tsetlin Machine training with shared-literal exclusion, plus an
//! include-only compressed model format and its inference engine.
//!
//! The crate is `no_std` (it needs `alloc`). File formats that involve text
//! or the filesystem live in the companion `ethereal` crate; binary codecs
//! for models and bank dumps are here because they are pure byte transforms.
//!
//! ```text
//! RawDataset ──booleanize──► LiteralMatrix ──train──► ClauseBank
//!                                                       │
//!                                  exclude_shared ◄─────┤ (interleaved)
//!                                                       ▼
//!                                 compress ──► SparseModel ──► bytes (.ethl)
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bank;
pub mod bits;
mod codec;
pub mod booleanizer;
pub mod error;
pub mod ethereal;
pub mod eval;
pub mod feedback;
pub mod rng;
pub mod sparse;

pub use bank::{ClauseBank, Hyperparams, Mode, Prediction};
pub use booleanizer::{BinningSpec, Encoding, LiteralMatrix, RawDataset};
pub use error::{DecodeError, Error};
pub use ethereal::{ExclusionSchedule, Phase, TraceRecord, TrainingTrace};
pub use eval::{Classifier, IncludeHeatmap};
pub use rng::TmRng;
pub use sparse::{ModelMetrics, SparseModel};

pub type Result<T, E = Error> = core::result::Result<T, E>;
