//! Geodesics near isolated conical and cuspidal singularities.
//!
//! The metric near the singular point is `dr² + f(r)² h_r` on `(0, R) × Y`.
//! [`warp`] holds the warping functions `f`, [`section`] the cross sections
//! `(Y, h_r)`, [`flow`] the geodesic integrator and [`experiments`] the
//! drivers that check the structural results numerically.

pub mod error;
pub mod experiments;
pub mod flow;
pub mod inverse;
pub mod ode;
pub mod quadrature;
pub mod section;
pub mod spec;
pub mod warp;

pub use error::{Error, Result};
