//! Priors and forward models for the five tasks.
//!
//! Every public forward-model entry point bumps a per-thread invocation
//! counter, so callers can check that amortized inference runs no
//! simulations.

use std::cell::Cell;

use rand::Rng;

use crate::domain::{seeded_rng, TaskId};
use crate::error::{Error, Result};

mod epileptor;
mod linear_gaussian;
mod lotka_volterra;
mod prior;
mod sir;
mod toy;

pub use epileptor::{
    classify_zone, simulate_epileptor, summarize_epileptor, EpileptorModel, EpileptorParams, DELTA_ETA, ETA_EZ, ETA_PZ, MIN_SERIES_LEN, N_SUMMARIES,
};
pub use linear_gaussian::{simulate_linear_gaussian, LG_DIM, LG_NOISE_VAR};
pub use lotka_volterra::{lv_first_integral, simulate_lotka_volterra, LvModel, BLOWUP_LIMIT};
pub use prior::{Marginal, Prior};
pub use sir::{simulate_sir, SirModel};
pub use toy::{simulate_toy, toy_mean, TOY_NOISE_STD};

pub(crate) use toy::toy_curve;

thread_local! {
    static CALLS: Cell<u64> = const { Cell::new(0) };
}

fn record_call() {
    CALLS.with(|c| c.set(c.get() + 1));
}

/// Forward-model invocations made on the current thread so far.
pub fn simulator_calls() -> u64 {
    CALLS.with(|c| c.get())
}

/// Draws an observation for `theta`. Errors if `theta` is outside the prior
/// support or the integration fails (Lotka-Volterra blow-up, overflow).
pub fn simulate<R: Rng + ?Sized>(task: TaskId, theta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if theta.len() != task.param_dim() {
        return Err(Error::Dimension {
            what: "theta",
            found: theta.len(),
            expected: task.param_dim(),
        });
    }
    if !Prior::for_task(task).contains(theta) {
        return Err(Error::invalid(format!("theta {theta:?} outside the {task} prior support")));
    }
    match task {
        TaskId::Toy => Ok(vec![simulate_toy(theta[0], rng)?]),
        TaskId::LinearGaussian => simulate_linear_gaussian(theta, rng),
        TaskId::Sir => simulate_sir(theta[0], theta[1], rng),
        TaskId::LotkaVolterra => simulate_lotka_volterra(theta, rng),
        TaskId::Bvep => {
            let series = simulate_epileptor(&EpileptorParams::from_slice(theta)?, rng)?;
            Ok(summarize_epileptor(&series)?.to_vec())
        }
    }
}

/// `simulate` with a generator built from `seed`.
pub fn simulate_seeded(task: TaskId, theta: &[f64], seed: u64) -> Result<Vec<f64>> {
    simulate(task, theta, &mut seeded_rng(seed))
}

/// Draws `theta ~ prior` and simulates, redrawing theta whenever the
/// integration fails. Gives up after `max_attempts`.
pub fn sample_joint<R: Rng + ?Sized>(task: TaskId, rng: &mut R, max_attempts: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let prior = Prior::for_task(task);
    let mut last = None;
    for _ in 0..max_attempts {
        let theta = prior.sample(rng);
        match simulate(task, &theta, rng) {
            Ok(x) => return Ok((theta, x)),
            Err(e @ Error::Integration(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::invalid("max_attempts must be positive")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulators_are_pure_in_theta_and_seed() {
        for task in TaskId::ALL {
            let theta = Prior::for_task(task).sample(&mut seeded_rng(1));
            let a = simulate_seeded(task, &theta, 77).unwrap();
            let b = simulate_seeded(task, &theta, 77).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), task.obs_dim());
            assert!(a.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn counter_tracks_calls() {
        let before = simulator_calls();
        simulate_seeded(TaskId::Toy, &[1.0], 0).unwrap();
        simulate_seeded(TaskId::Sir, &[0.4, 0.1], 0).unwrap();
        assert_eq!(simulator_calls() - before, 2);
    }

    #[test]
    fn out_of_support_theta_is_rejected() {
        assert!(simulate_seeded(TaskId::Toy, &[6.0], 0).is_err());
        assert!(simulate_seeded(TaskId::Sir, &[-0.4, 0.1], 0).is_err());
        assert!(simulate_seeded(TaskId::Bvep, &[0.0, 20.0, -2.0, 3.0], 0).is_err());
        assert!(simulate_seeded(TaskId::LinearGaussian, &[0.0; 3], 0).is_err());
    }
}
