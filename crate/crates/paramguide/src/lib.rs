//! Entangled-biphoton generation by parametric down-conversion in
//! dispersive, lossy waveguides.
//!
//! The library solves the degenerate SPDC boundary-value problem in
//! closed form (signal and Langevin-noise spectral fluxes, flux
//! correlations between symmetric detection windows), propagates the
//! state vector of a quantized single-photon pump across a discrete band
//! grid, and evolves the initial-value Fock dynamics of a pair mode. An
//! independent oracle module re-derives every closed form numerically:
//! fundamental-matrix integration of the coupled mode equations,
//! deterministic second-moment quadrature of the reservoir noise, and
//! Wick-factorized fourth moments.
//!
//! Units are CGS: lengths in cm, angular frequencies in rad/s, energies
//! in erg. Config files speak THz and meV; see [`model`].

// Guards are written as !(x > 0.0) on purpose: unlike x <= 0.0 the
// negated form also rejects NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlations;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod qpump;
pub mod quad;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};
pub use model::DeviceConfig;
