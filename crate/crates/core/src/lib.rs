//! Paired significance tests for deciding whether an optimized model's
//! benchmark accuracy has degraded relative to a baseline.
//!
//! The crate consumes per-sample scores of two models on the same documents
//! and answers with one-sided p-values:
//!
//! * [`binary_tests`]: exact McNemar and its pooled, Fisher and max-drop
//!   aggregations over tasks.
//! * [`permutation`]: sign-flip permutation versions of the same three
//!   aggregations for continuous scores.
//! * [`power`]: asymptotic power, signal-to-noise ratio and dataset trimming.
//! * [`sim`]: synthetic rejection-rate experiments.
//! * [`harness`]: ingestion of score dumps and report generation.

pub mod error;
pub mod harness;
pub mod numerics;
pub mod permutation;
pub mod power;
pub mod score_model;
pub mod sim;
mod signflip;

pub use error::{Error, Result};
