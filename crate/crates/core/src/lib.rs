//! Finite-truncation laboratory for Gaussian calculus on abstract Wiener
//! spaces: Gaussian measures and Wick sums, symbol classes with their norms,
//! stochastic-extension convergence rates and the heat semigroup.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod extension;
pub mod gaussian;
pub mod heat;
pub mod hilbert;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod symbols;

pub use error::{LabError, Result};
pub use num_complex::Complex64;
