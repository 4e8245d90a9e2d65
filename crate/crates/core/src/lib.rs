//! Numerical laboratory for Hamilton-Jacobi theory of excitations that
//! propagate along surfaces.
//!
//! The crate models an `n`-dimensional variational problem with `m`
//! dependent fields. Points of the "medium" are `(n-1)`-dimensional closed
//! curves `C`; the action of the extremal surface ending on `C` defines a
//! functional `S(C)`. The modules below build the transform between tangent
//! and integral elements, extremal surfaces and their actions, and residual
//! checks of the resulting functional equations.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hamilton_jacobi;
pub mod lagrangians;
pub mod legendre;
pub mod numerics;
pub mod quasiclassics;
pub mod sampling;

pub use error::{Error, Result};
