//! Finite-dimensional toolkit for the peripheral spectrum of positive
//! operators on coordinate Banach lattices.
//!
//! Spaces are coordinate lattices `C^n` carrying either the sup-norm (a
//! `C(K)` model) or the 1-norm (an `l^1` model). Operators are dense complex
//! matrices on such a space.

pub mod error;
pub mod fixed_space;
pub mod json;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod rational;
pub mod shift_mult;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
pub use lattice::{LatticeVector, NormTag, SpaceModel};
pub use operator::OperatorMatrix;

pub type C64 = num_complex::Complex64;

/// Default absolute tolerance for order comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;
