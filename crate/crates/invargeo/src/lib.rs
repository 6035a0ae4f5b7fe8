//! Quantifies when an invariant classifier generalizes better than a
//! non-invariant one: factors a finite input space into base space x
//! transformation set, computes covering numbers, checks the sufficient
//! conditions for a covering-ratio gain, evaluates the margin-based
//! generalization-error bounds, and validates the predictions with a
//! desk-scale stable linear classifier.

pub mod analysis;
pub mod atoms;
pub mod bounds;
pub mod classifier;
pub mod covering;
pub mod error;
pub mod geometry;
pub mod manifest;
pub mod report;
pub mod transforms;

pub use error::{Error, Result};
