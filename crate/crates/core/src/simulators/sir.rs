use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Fixed-step RK4 SIR model observed through `I/N` at ten evenly spaced times.
#[derive(Debug, Clone, PartialEq)]
pub struct SirModel {
    pub population: f64,
    pub initial_infected: f64,
    pub horizon: f64,
    pub step: f64,
    pub n_obs: usize,
    pub obs_noise_std: f64,
}

impl Default for SirModel {
    fn default() -> Self {
        SirModel {
            population: 1e6,
            initial_infected: 1.0,
            horizon: 160.0,
            step: 0.1,
            n_obs: 10,
            obs_noise_std: 0.01,
        }
    }
}

impl SirModel {
    fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    fn steps_per_obs(&self) -> usize {
        self.steps() / self.n_obs
    }

    /// Observation times `horizon * k / n_obs`, `k = 1..=n_obs`.
    pub fn obs_times(&self) -> Vec<f64> {
        (1..=self.n_obs).map(|k| self.horizon * k as f64 / self.n_obs as f64).collect()
    }

    /// Integrates the ODE, calling `on_step(t, [S, I, R])` after every step
    /// (and once for the initial state).
    pub fn integrate(&self, beta: f64, gamma: f64, mut on_step: impl FnMut(f64, [f64; 3])) -> Result<()> {
        if !(beta >= 0.0 && gamma > 0.0 && beta.is_finite() && gamma.is_finite()) {
            return Err(Error::invalid(format!("SIR rates must satisfy beta >= 0, gamma > 0 (got {beta}, {gamma})")));
        }
        super::record_call();
        let n = self.population;
        let rhs = |s: [f64; 3]| -> [f64; 3] {
            let infection = beta * s[0] * s[1] / n;
            let recovery = gamma * s[1];
            [-infection, infection - recovery, recovery]
        };
        let h = self.step;
        let mut state = [n - self.initial_infected, self.initial_infected, 0.0];
        on_step(0.0, state);
        for k in 1..=self.steps() {
            let k1 = rhs(state);
            let k2 = rhs(axpy(state, 0.5 * h, k1));
            let k3 = rhs(axpy(state, 0.5 * h, k2));
            let k4 = rhs(axpy(state, h, k3));
            for d in 0..3 {
                state[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
            }
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integration(format!("SIR state non-finite at step {k}")));
            }
            on_step(k as f64 * h, state);
        }
        Ok(())
    }

    /// Noise-free `I(t)/N` at the observation times.
    pub fn mean_observation(&self, beta: f64, gamma: f64) -> Result<Vec<f64>> {
        let per_obs = self.steps_per_obs();
        let mut out = Vec::with_capacity(self.n_obs);
        let mut step = 0usize;
        self.integrate(beta, gamma, |_, s| {
            if step > 0 && step % per_obs == 0 && out.len() < self.n_obs {
                out.push(s[1] / self.population);
            }
            step += 1;
        })?;
        Ok(out)
    }

    /// Noisy observation, clipped to `[0, 1]`.
    pub fn simulate<R: Rng + ?Sized>(&self, beta: f64, gamma: f64, rng: &mut R) -> Result<Vec<f64>> {
        if !(beta > 0.0 && gamma > 0.0) {
            return Err(Error::invalid(format!("SIR rates must be positive (got {beta}, {gamma})")));
        }
        let mean = self.mean_observation(beta, gamma)?;
        Ok(mean
            .into_iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                (m + self.obs_noise_std * z).clamp(0.0, 1.0)
            })
            .collect())
    }
}

fn axpy(s: [f64; 3], a: f64, k: [f64; 3]) -> [f64; 3] {
    [s[0] + a * k[0], s[1] + a * k[1], s[2] + a * k[2]]
}

pub fn simulate_sir<R: Rng + ?Sized>(beta: f64, gamma: f64, rng: &mut R) -> Result<Vec<f64>> {
    SirModel::default().simulate(beta, gamma, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_contacts_means_monotone_decay() {
        let m = SirModel::default();
        let obs = m.mean_observation(0.0, 0.125).unwrap();
        assert_eq!(obs.len(), 10);
        assert!(obs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn no_contacts_matches_exponential_decay() {
        let m = SirModel::default();
        let gamma = 1.0;
        let obs = m.mean_observation(0.0, gamma).unwrap();
        for (o, t) in obs.iter().zip(m.obs_times()) {
            let exact = 1e-6 * (-gamma * t).exp();
            // RK4 loses about (γh)^5/120 relative accuracy per step.
            assert!(((o - exact) / exact).abs() < 5e-4, "t={t}: {o} vs {exact}");
        }
    }

    #[test]
    fn population_is_conserved_every_step() {
        let m = SirModel::default();
        for (b, g) in [(0.4, 0.125), (1.5, 0.1), (0.1, 0.3)] {
            let mut worst: f64 = 0.0;
            m.integrate(b, g, |_, s| {
                worst = worst.max(((s[0] + s[1] + s[2]) - m.population).abs() / m.population);
            })
            .unwrap();
            assert!(worst < 1e-6, "beta={b} gamma={g}: drift {worst}");
        }
    }

    #[test]
    fn noisy_output_is_clipped() {
        let mut rng = crate::domain::seeded_rng(5);
        let x = simulate_sir(0.4, 0.125, &mut rng).unwrap();
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn non_positive_rates_are_rejected() {
        let mut rng = crate::domain::seeded_rng(5);
        assert!(simulate_sir(0.0, 0.1, &mut rng).is_err());
        assert!(simulate_sir(0.3, -0.1, &mut rng).is_err());
    }
}
