//! Numerical toolkit for the escaping set of explicit quasiregular maps.
//!
//! * [`maps`] evaluates the planar maps `g`, `L`, `h`, `f` and the cylindrical
//!   map on R^3.
//! * [`dilatation`] estimates Jacobians, Beltrami coefficients and the
//!   dilatation `K` by central differences.
//! * [`orbits`] iterates and classifies orbits and checks the rotation lemma.
//! * [`grids`] builds escape-time grids, labels components, estimates the
//!   maximum modulus and searches circle preimages.
//! * [`cli`] parses run configurations and executes them.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dilatation;
pub mod error;
pub mod grids;
pub mod maps;
pub mod orbits;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use maps::{ComplexPoint, CylPoint3, ExtendedPoint, MapKind, MapParams, MapSpec, MapValue};
pub use num_complex::Complex64;
