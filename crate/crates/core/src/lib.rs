//! Streaming classification with a deep stack of self-evolving fuzzy classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`stream`]: labelled sample batches from synthetic drifting generators or CSV files
//! - [`gclass`]: the evolving TSK fuzzy classifier used as one hidden layer
//! - [`drift`]: Hoeffding-bound drift detection over prequential error bits
//! - [`stats`]: recursive moments, Pearson correlation and MICI similarity
//! - [`stack`]: the deep stacked network: augmentation, voting, feature
//!   selection, layer merging and drift-driven growth
//! - [`eval`]: prequential test-then-train driver and metrics
//! - [`config`]: flat `key = value` run manifests
//! - [`checkpoint`]: versioned model dumps

pub mod checkpoint;
pub mod config;
pub mod drift;
pub mod error;
pub mod eval;
pub mod gclass;
mod linalg;
pub mod stack;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
