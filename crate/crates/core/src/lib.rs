//! Simulation engine for spontaneous unitarity violation driven by colored
//! noise, on a two-state system.
//!
//! The state evolves under a norm-preserving non-unitary generator whose
//! strength is set by a stochastic field ξ_t. The crate provides the noise
//! processes, trajectory integrators, ensemble observables, the reference
//! master-equation solution, and a harness running reproducible experiments.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod master;
pub mod noise;
pub mod observables;
pub mod sum;

pub use error::{Error, Result};
