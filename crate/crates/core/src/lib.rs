//! Finite-horizon laboratory for modulus-modulated statistical and strong
//! Cesaro convergence, plain and lacunary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod catalog;
pub mod convergence;
pub mod counterexamples;
pub mod error;
pub mod estimate;
pub mod format;
pub mod harness;
pub mod lacunary;
pub mod modulus;
pub mod sequence;
pub mod sum;

pub use error::{Error, Result};
