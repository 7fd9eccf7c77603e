//! Root-vector series for compact sectorial operators.
//!
//! The crate builds finite-dimensional operators with prescribed Jordan
//! structure, evaluates operator functions and solutions of the evolution
//! equation `D^{1/α}_− u = φ(W) u` as grouped root-vector sums, and checks
//! them against contour-integral and diagonal oracles. Supporting modules
//! provide 1D fractional-calculus kernels and entire-function growth tools.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abel;
pub mod contour;
pub mod corpus;
pub mod error;
pub mod evolve;
pub mod fraccalc;
pub mod growth;
pub mod linops;
pub mod quad;
pub mod series;
pub mod special;
pub mod symbol;

pub use error::{Error, Result};
