//! Reservoir-compensated model predictive control.
//!
//! The crate learns the one-step residual between a nominal linear model and
//! the true plant with an echo state network, then injects the learned
//! residual into a receding-horizon controller as additive model
//! compensation. Everything here is pure computation over owned buffers; IO,
//! file formats and the command line live in the companion `resmpc-cli`
//! crate.
//!
//! Module map:
//! - [`linalg`]: dense row-major matrices, ridge solve, power iteration,
//!   Riccati recursion.
//! - [`rng`]: seedable, platform-independent generator (xoshiro256++).
//! - [`esn`]: reservoir construction, leaky state update, readout training.
//! - [`plant`]: spring-damper discretization, configurable true plant,
//!   residual targets and regressors.
//! - [`mpc`]: condensed finite-horizon quadratic controller with additive
//!   per-step compensation.
//! - [`experiment`]: the two-phase collect / train / compensate pipeline,
//!   logs and metrics.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod esn;
pub mod experiment;
pub mod linalg;
pub mod mpc;
pub mod plant;
pub mod rng;

pub use linalg::Mat;
