//! Exact event-level simulation and closed-form analysis of a fluid queue
//! whose input is a drift-plus-compound-Poisson subordinator, drained at a
//! constant service rate, where the server suffers Poisson breakdowns (each
//! adding a repair-sized workload jump) and takes a vacation whenever the
//! system empties (adding a vacation-sized jump, so the workload is zero only
//! instantaneously).
//!
//! The crate is organized as:
//!
//! - [`levy`] — jump-size laws, the net-input process and its exponent
//!   `varphi`, derivatives at zero, and the exponent inverse;
//! - [`sim`] — the event-driven simulator: sample paths, stationary samples,
//!   reflected (interruption-free) paths, busy periods, first passage, killed
//!   sampling, and the exponential martingale statistic;
//! - [`analytics`] — every closed-form performance expression: steady-state
//!   transform, moments, rates, busy-period means, transient transform,
//!   correlation transform, and distributional decompositions;
//! - [`transforms`] — empirical Laplace–Stieltjes transform estimation and
//!   numerical inversion of analytic transforms to distribution functions;
//! - [`validation`] — statistical verdicts: two-sample Kolmogorov–Smirnov,
//!   confidence intervals, the martingale zero-mean test, and the
//!   theory-versus-simulation verification suite;
//! - [`config`] / [`cli`] — the TOML experiment format and the `analyze`,
//!   `simulate`, `verify` commands behind the `fluidq` binary.
//!
//! Each runnable capability also ships as a standalone example; see the
//! `examples/` directory and the README.

pub mod analytics;
pub mod cli;
pub mod config;
pub mod error;
pub mod levy;
pub mod rng;
pub mod sim;
pub mod transforms;
pub mod validation;

pub use error::{Error, Result};
pub use levy::{JumpDistribution, NetInputModel};
pub use sim::{PathResult, QueueModel, VacationMode};
