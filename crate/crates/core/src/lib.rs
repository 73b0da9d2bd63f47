//! Rotor-bearing simulation and oil supply flowrate identification.
//!
//! The crate is organised bottom-up:
//!
//! - [`lubrication`]: mass-conserving p-θ film solver for a grooved journal bearing
//!   with the groove supply flowrate as a source term.
//! - [`bearing`]: static equilibrium and linearised stiffness/damping coefficients.
//! - [`rotor`]: Timoshenko finite element rotor model with rigid discs and gyroscopics.
//! - [`response`]: Newmark time integration, full-spectrum directional components, noise.
//! - [`system`]: the full simulation chain from a pair of supply flowrates to response
//!   parameters.
//! - [`identification`]: multi-start bounded Newton-Raphson search for the flowrates.
//!
//! All quantities are SI internally. Flowrates in ml/min only appear at the
//! configuration boundary, see [`units`].

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bearing;
pub mod error;
pub mod identification;
pub mod lubrication;
pub mod reference;
pub mod response;
pub mod rotor;
pub mod system;
pub mod units;

pub use error::{Error, Result};
