//! Steady subsonic Euler flow over a curved lower boundary.
//!
//! The flow is reduced to a quasilinear elliptic equation for the stream
//! function, solved on a truncated, boundary-fitted grid by a linearized
//! fixed-point iteration, and checked against a battery of diagnostics.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod farfield;
pub mod geometry;
pub mod io;
pub mod quadrature;
pub mod run;
pub mod solver;
pub mod thermo;
