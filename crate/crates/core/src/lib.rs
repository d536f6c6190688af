//! Core library for unobtrusive annotator-quality assessment.
//!
//! The crate is organised bottom-up:
//!
//! * [`nn`] is a small deterministic dense-network substrate (forward/backward,
//!   BCE-with-logits, Adam, finite-difference gradient checking).
//! * [`catalog`] holds the cell taxonomy, image records, a parametric phantom
//!   renderer, PPM/manifest storage, stratified splitting and class balancing.
//! * [`gan`] and [`diffusion`] are the two class-conditioned generators.
//! * [`study`] builds and runs the two-part real-vs-fake Turing test, and
//!   [`metrics`] turns the response log into pick rates and confusion reports.
//! * [`inject`] plans ground-truth probe insertion into annotation tasks and
//!   keeps gamified annotator scores.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod catalog;
pub mod dataset;
pub mod diffusion;
pub mod gan;
pub mod inject;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod study;

pub use catalog::{CellClass, ImageRecord, Provenance, Split};
pub use nn::{DenseNet, Tensor};
