//! Encrypted video traffic identification toolkit.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] reads packet traces, assembles bidirectional flows keyed by
//!    5-tuple, drops mice flows and labels the rest.
//! 2. [`features`] turns every flow into a fixed 89-column vector of
//!    statistics, including the payload, byte-rate and sliding-window peak
//!    point features.
//! 3. [`addfs`] ranks features by the summed pairwise Wasserstein distance
//!    between per-class distributions over ChiMerge intervals.
//! 4. [`eval`] scores selected subsets with cross-validated classifiers and
//!    compares selectors with the Wilcoxon signed-rank test.
//!
//! Data-parallel loops (per flow, per feature, per fold) go through
//! [`Exec`], which uses rayon when the `parallel` feature is enabled and
//! falls back to plain iteration otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod addfs;
pub mod dataset;
pub mod eval;
mod exec;
pub mod features;
pub mod ingest;
pub mod stats;
pub mod synth;

pub use exec::Exec;
