//! Pseudospectral solvers and paradifferential tools for fractional dispersive
//! Burgers equations on the torus, with the flow-map separation experiments
//! built on top of them.

// `!(x > 0.0)` is how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod characteristics;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod norms;
pub mod paradiff;
pub mod spectral;
pub mod wwsymbols;

pub use error::{Error, Result};
pub use spectral::{RealField, Spectrum, TorusGrid};
