//! Numerical laboratory for unitary-ensemble eigenvalue correlation kernels.
//!
//! The crate builds the objects needed to observe, at desk scale, how the
//! finite-n Christoffel-Darboux kernel of a polynomial external field
//! approaches its local scaling limits:
//!
//! * [`potential`] — polynomial confining fields and the quartic family with
//!   an interior critical point;
//! * [`equilibrium`] — one-cut (possibly signed) equilibrium measures, their
//!   densities, and the constants that govern the critical scaling;
//! * [`orthopoly`] — three-term recurrences for the weight `exp(-N V)` and the
//!   finite-n kernel;
//! * [`painleve2`] — the Hastings-McLeod solution of Painleve II and the
//!   associated real psi-functions;
//! * [`limit_kernels`] — sine, Airy, and Painleve II limiting kernels;
//! * [`harness`] — bulk/edge/critical convergence experiments, configuration,
//!   and CSV reports.

pub mod error;
pub mod ode;
pub mod quad;

pub mod equilibrium;
pub mod harness;
pub mod limit_kernels;
pub mod orthopoly;
pub mod painleve2;
pub mod potential;

pub use error::{Error, Result};
