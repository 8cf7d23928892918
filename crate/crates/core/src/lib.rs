//! Joyce structures from BPS data.
//!
//! The crate builds BPS structures and their wall-crossing automorphisms,
//! evaluates closed-form Riemann–Hilbert solutions for the A1, finite
//! uncoupled and resolved-conifold families, extracts Joyce functions from
//! them, and computes the induced linear geometry. A separate module treats
//! the A2 quiver through periods of the cubic `y² = x³ + ax + b`.

#![allow(clippy::needless_range_loop, clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod a2;
pub mod bps;
pub mod error;
pub mod frobenius;
pub mod io;
pub mod joyce;
pub mod numerics;
pub mod rh;
pub mod specfn;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::C64;
