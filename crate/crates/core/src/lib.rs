//! Symbolic-numeric engine for approximate Bergman projections.
//!
//! The crate computes the classical analytic symbol and kernel of the
//! Bergman projection for strictly plurisubharmonic polynomial weights on
//! C^n, discretizes the resulting cutoff projection, and validates it
//! against brute-force weighted Gram-matrix oracles (including the CP^1
//! line-bundle desk model).

pub mod error;
pub mod series;
pub mod util;
pub mod weight;
pub mod quantize;
pub mod bergman;
pub mod oracle;

pub use error::{Error, Result};
