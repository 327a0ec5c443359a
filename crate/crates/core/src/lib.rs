//! Group Search Optimizer (GSO) family for training one-hidden-layer MLP
//! classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`gso`]: the standard producer/scrounger/ranger engine over an arbitrary
//!   cost function with box bounds.
//! - [`weight_decay`]: per-member adaptive weight decay layered on top of the
//!   engine.
//! - [`cooperative`]: space-partitioned drivers (`S` and `H` variants) built
//!   from several GSO groups.
//! - [`mlp`]: flat weight-vector encoding, forward pass and MSE fitness.
//! - [`dataset`]: CSV ingestion, random splitting and normalisation.
//! - [`stats`], [`experiment`], [`report`], [`config`]: the benchmark harness.

pub mod config;
pub mod cooperative;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod gso;
pub mod mlp;
pub mod report;
pub mod stats;
pub mod weight_decay;

pub use error::{Error, Result};
pub use gso::{GsoRng, Objective};
