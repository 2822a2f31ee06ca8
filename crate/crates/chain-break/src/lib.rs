//! Simulation library for a pulled chain of Brownian particles with
//! nearest-neighbour interaction.
//!
//! A chain of `d + 1` particles interacts through a strictly convex pair
//! potential; the left end is pinned, the right end is pulled away at speed
//! `eps`, and each interior particle feels independent Brownian noise of
//! amplitude `sigma`. The chain breaks when a gap between neighbours first
//! reaches a threshold `b_break`. This crate simulates the nonlinear chain,
//! its constant-coefficient linearisation, and its time-varying
//! linearisation; detects break times and positions; and verifies that in
//! the slow-pulling, small-noise regime the suitably normalised break time
//! follows a universal double-exponential (Gumbel) law whose parameters
//! depend on the potential only through its curvature at the break
//! distance.
//!
//! Modules:
//!
//! * [`model`] — domain types, potentials, limit-law parameters;
//! * [`spectral`] — the discrete Laplacian, its closed-form spectrum, the
//!   stiffness integral and deterministic drift profile;
//! * [`engine`] — path simulation and first-passage detection;
//! * [`oracle`] — closed-form and quadrature Gaussian moments used as
//!   Monte Carlo ground truth;
//! * [`scaling`] — reductions onto the standard problem (`u = 1, b = 2`);
//! * [`stats`] — empirical CDF distances, chi-square, reproducible seeding;
//! * [`config`], [`report`], [`runner`] — the batch experiment harness
//!   behind the CLI.

// `!(x > 0.0)` in argument validation deliberately rejects NaN, and index
// loops mirror the matrix formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod engine;
mod error;
pub mod model;
pub mod oracle;
pub(crate) mod quad;
pub mod report;
pub mod runner;
pub mod scaling;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
