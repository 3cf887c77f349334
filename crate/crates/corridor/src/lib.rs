//! Numerical laboratory for the 1D nonlocal transport system
//!
//! ```text
//!   omega_t + u omega_x = rho / x^beta,
//!   rho_t   + u rho_x   = 0,            u(x,t) = -x * Q(x,t),
//!   Q(x,t) = integral_x^inf omega(y,t)/y dy,
//! ```
//!
//! posed on the positive half-line. The system has a family of stationary
//! singular profiles `omega = k x^{-beta/2}`, `rho = k^2`, and suitably
//! prepared compactly supported data collapses onto that profile in finite
//! time. This crate simulates the collapse with Lagrangian particles and
//! certifies the power-law barrier construction that controls the vorticity
//! up to the blowup time:
//!
//! * [`state`]: sorted particle clouds with piecewise-linear profiles
//! * [`velocity`]: exact per-cell quadrature of the nonlocal velocity
//! * [`exact`]: closed-form singular solutions and PDE residuals
//! * [`barrier`]: single-scale barrier parameters, data generation and
//!   certification
//! * [`sequences`]: the multiscale barrier sequences and their relay and
//!   trapping conditions
//! * [`sim`]: RK4 particle stepper with CFL-style adaptive time steps
//! * [`monitor`]: runtime control checks, BKM integrals, exponent fits
//! * [`cli`]: the `corridor` command-line front end
//!
//! Everything is deterministic: identical inputs produce byte-identical
//! output files.

// `!(v > 0.0)`-style guards double as NaN rejection; the un-negated forms
// clippy suggests would let NaN through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod cli;
pub mod exact;
pub mod grid;
pub mod monitor;
pub mod report;
pub mod sequences;
pub mod sim;
pub mod state;
pub mod svg;
pub mod velocity;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid particle cloud: {0}")]
    InvalidCloud(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("parameter selection infeasible: {0}")]
    Infeasible(String),

    #[error("time step rejected at t = {t}, dt = {dt}: {reason}")]
    StepRejected { t: f64, dt: f64, reason: String },

    #[error("evaluation outside domain: {0}")]
    OutsideDomain(String),

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),

    #[error("failed to parse {0}: {1}")]
    Parse(String, String),

    #[error("json error in {0}: {1}")]
    Json(String, #[source] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
