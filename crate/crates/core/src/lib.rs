//! Spatially coupled base-matrix ensembles and their density evolution.
//!
//! The crate builds regular circulant and small-world (SW) coupling graphs,
//! runs the coupled density-evolution (DE) recursion for BPSK large-system
//! CDMA, estimates belief-propagation thresholds by bisection over the
//! propagation load, and searches SW ensembles for instances that converge
//! in few iterations.
//!
//! Module map:
//! - [`coupling`]: graphs, rewiring, training assignment, base matrices,
//!   graph files.
//! - [`de`]: Q function, BPSK MMSE, the DE recursion and trajectory output.
//! - [`threshold`]: BP-threshold bisection and the scalar fixed-point scan.
//! - [`search`]: seeded ensemble sampling, scoring and ranking.
//! - [`rng`]: the portable seeded generator and seed mixing.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod de;
pub mod error;
pub mod output;
pub mod rng;
pub mod search;
pub mod threshold;

pub use error::{Error, Result};
