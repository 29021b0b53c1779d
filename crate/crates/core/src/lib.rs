//! Convergence-rate laboratory for randomized monotone descent methods.
//!
//! The crate is `no_std` with `alloc`. File formats, the CLI and parallel
//! ensembles live in the `ratelab` companion crate.

#![no_std]

extern crate alloc;

pub mod auditor;
pub mod engine;
pub mod error;
pub mod lab;
pub mod math;
pub mod rate_kernel;
pub mod rng;
pub mod stats;
pub mod zoo;

pub use error::{Error, Result};
