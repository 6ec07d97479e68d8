//! Numerical core for gravitational noise and entanglement thresholds of
//! non-quantized Newtonian gravity.
//!
//! The crate is `no_std` (it needs `alloc`). Everything is in SI units; see
//! [`units`] for the ħ bookkeeping.

#![no_std]
// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
mod float;
pub mod gaussian;
pub mod hybrid;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod qubit;
pub mod scanner;
pub mod thresholds;
pub mod units;

pub use error::{Error, Result};
