//! Number-on-the-forehead communication toolkit.
//!
//! Executes randomized simultaneous protocols for generalized inner product,
//! set disjointness and MOD3-of-XORs with exact cost accounting and exact
//! per-input error oracles, and checks discrepancy and correlation bounds by
//! exhaustive search on small instances.

pub mod combinatorics;
pub mod cylinder;
pub mod discrepancy;
pub mod distributions;
pub mod error;
pub mod functions;
pub mod harness;
pub mod matrix;
pub mod model;
pub mod protocols;
pub mod tape;

pub use error::{Error, Result};
pub use matrix::{InputMatrix, View};
pub use tape::RandomTape;
