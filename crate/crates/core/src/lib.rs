//! Numerical laboratory for anisotropic wake weights and Oseen decay rates.
//!
//! The crate evaluates the weights `(1+|x|)^α (1+|x|-x₁)^β`, their
//! Muckenhoupt ratios and ball integrals, evolves periodic grid fields under
//! the whole-space Oseen semigroup, encodes the hypothesis sets of weighted
//! `L^q`–`L^r` decay estimates in exact rational arithmetic, integrates
//! forced problems by Duhamel's formula and fits decay exponents.

pub mod duhamel;
pub mod error;
pub mod field;
pub mod muckenhoupt;
pub mod quadrature;
pub mod rates;
pub mod regions;
pub mod semigroup;
pub mod weights;

pub use error::{Error, Result};
