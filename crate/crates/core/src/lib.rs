#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Zitterbewegung of light in binary waveguide lattices with alternating,
//! periodically modulated gain and loss.
//!
//! The crate couples a coupled-mode lattice integrator with a closed-form
//! Dirac-model prediction, and maps the pseudo-PT phase boundary in the
//! (gain ratio, modulation frequency) plane.

pub mod compare;
pub mod diagnostics;
pub mod dirac;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod io;
pub mod lattice;
pub mod propagator;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
