//! Numerical differential geometry of statistical manifolds and their
//! immersed surfaces.
//!
//! A statistical manifold carries a metric together with a pair of
//! torsion-free dual connections. This crate evaluates the associated
//! curvature tensors by finite differences, computes the dual fundamental
//! forms and curvature invariants of parametric surfaces, and checks the
//! Euler and Wintgen curvature inequalities on a catalogue of
//! self-validating fixtures and seeded random scans.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable default
//! features and enable `libm` to build without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("statkit-core requires either the `std` or the `libm` feature");

pub mod error;
pub mod fixtures;
pub mod immersion;
pub mod invariants;
pub mod manifold;
mod math;
pub mod numerics;

pub use error::Error;
pub use fixtures::{FixtureSpec, ValidationReport};
pub use immersion::SurfaceImmersion;
pub use invariants::{EvalOptions, InvariantReport, Summary};
pub use manifold::StatisticalManifold;
pub use numerics::{Array3, FdScheme, Matrix, Vector, MAX_DIM};

/// Crate-wide result alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;
