//! Spectral capacity of flexible-load ensembles.
//!
//! A flexible load (an HVAC system, a battery, a water heater) can deviate
//! from its baseline consumption and act as virtual energy storage for the
//! grid, as long as the deviation respects four quality-of-service limits:
//! instantaneous power, ramp over a short interval, energy over a window,
//! and a storage variable such as indoor temperature. Treating the
//! deviation as a wide-sense-stationary process turns each limit into a
//! weighted integral constraint on its spectral density.
//!
//! The crate is organized as a pipeline:
//!
//! - [`spectral`]: time series, frequency grids, Welch estimation, ARMA
//!   spectral fits and the band-pass step that produces the balancing
//!   authority's need spectrum.
//! - [`dynamics`]: load classes and the frequency weights |H|², |G|² and the
//!   ramp weight.
//! - [`constraints`]: the discretized feasible set for each bin of loads.
//! - [`solver`]: projection of a target spectrum onto the feasible set and
//!   the two-solve bound procedure for heterogeneous fleets.
//! - [`capacity`]: power and energy capacity and the coverage indices.
//! - [`ensemble`]: aggregation bounds for correlated loads.
//! - [`montecarlo`]: sample-path synthesis and empirical checks of the
//!   probabilistic guarantees.
//! - [`pipeline`]: configuration, result documents and the commands behind
//!   the `flexcap` binary.
//!
//! Units are hours, kW, kWh and rad/hour throughout. Spectra are one-sided
//! with variance = (1/π)·∫ S dω.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod constraints;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod montecarlo;
pub mod pipeline;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
