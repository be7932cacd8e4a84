//! Weak-measurement qubit dynamics: discrete quantum trajectories, their
//! master equation, the Fokker-Planck continuum limit, weak ratchets and
//! dynamic localization.

// `!(v > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fp;
pub mod master;
pub mod measurement;
pub mod ratchet;
pub mod rng;
pub mod schedule;
pub mod trajectory;

pub use error::{Error, Result};

/// Library version, recorded in run summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
