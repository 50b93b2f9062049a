//! Rough-volatility models as rough differential equations driven by the
//! joint (fBm, Brownian) Itô lift.
//!
//! The crate is organised bottom-up:
//!
//! - [`algebra`]: words over the weighted alphabet, the shuffle product, the
//!   generator decomposition and Monte Carlo evaluation of the Itô lift.
//! - [`noise`]: reproducible Brownian / fractional Brownian paths (exact
//!   Riemann–Liouville oracle and the hybrid scheme), correlated pairs and
//!   CSV export.
//! - [`leadlag`]: lead / lagged piecewise-linear and mollified paths.
//! - [`iterated`]: iterated integrals `∫ (X_{T1,t})^m dW_t`, their lead-lag,
//!   hybrid and mollifier approximants, Hölder error functionals and
//!   convergence-rate studies.
//! - [`rde`]: the Wong–Zakai ODE solver, martingale drifts and the shipped
//!   quadratic-Heston systems.
//! - [`pricing`]: Monte Carlo call prices, the calibration loss and a
//!   Nelder–Mead calibration loop.
//! - [`cli`]: the batch entry points behind the `roughvol` binary.

pub mod algebra;
pub mod cli;
mod conv;
pub mod error;
pub mod iterated;
pub mod leadlag;
pub mod noise;
pub mod pricing;
pub mod rde;
pub mod stats;

pub use error::{Error, Result};
