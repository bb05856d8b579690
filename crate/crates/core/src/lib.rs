//! Weighted special atoms on the torus `[0, 2π)^d`, their analytic extension
//! to the polydisc through the product Poisson-type kernel, the weighted
//! analytic norms of those extensions, and executable numerical checks of the
//! inequalities that tie the two norms together.
//!
//! Module map:
//!
//! * [`geometry`] – cubes, dyadic subcubes and sign patterns.
//! * [`weights`] – one-dimensional and product weights, class tests.
//! * [`atoms`] – special atoms, atomic functions, Haar decomposition.
//! * [`kernels`] – Poisson-type kernel, `K1`/`K2`, closed-form gradients.
//! * [`extension`] – polydisc extension, radial limits, `A_w^p` norms.
//! * [`verify`] – lemma-level and theorem-level numerical checks.
//! * [`cli`] – the `atomlab` command-line front end.

pub mod atoms;
pub mod cli;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod report;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};

/// Largest supported dimension. Subcube indices are stored in `usize` bit
/// patterns and every atom visits all `2^d` subcubes.
pub const MAX_DIM: usize = 16;

pub(crate) const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
