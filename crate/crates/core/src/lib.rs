//! Amortized Bayesian decision making for stochastic simulators.
//!
//! Two routes to the Bayes-optimal action `argmin_a E[c(θ, a) | x_o]`:
//! a conditional density estimator followed by Monte-Carlo averaging of the
//! cost over its samples (NPE-MC), and a network regressed directly onto
//! realized costs `c(θ, a)` with MSE, whose minimizer is the posterior
//! expected cost (BAM). Ground-truth oracles and an experiment harness
//! evaluate both on five simulators.

pub mod costs;
pub mod dataset;
pub mod domain;
pub mod envelope;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod nets;
pub mod oracles;
pub mod simulators;

pub use domain::{Action, SimPair, TaskId, Zone};
pub use error::{Error, Result};
