//! Degenerate obliquely reflected Brownian motion in the quadrant.
//!
//! The crate evaluates the explicit objects attached to this process on the
//! normalized model (unit diffusion scales, drifts summing to one):
//! boundary Laplace transforms by compensation series, the family of Martin
//! harmonic functions, directional Green-function asymptotics, and Green
//! densities by contour inversion. An Euler-Skorokhod Monte Carlo simulator
//! serves as an independent oracle.

// Negated orderings reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Points and pushes are plain coordinate pairs throughout.
#![allow(clippy::type_complexity)]

pub mod acceptance;
pub mod cli;
pub mod compensation;
pub mod greens;
pub mod kernel;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod series;
