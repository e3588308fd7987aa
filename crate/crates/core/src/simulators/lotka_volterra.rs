use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// States above this magnitude count as a blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Predator-prey model `dX = αX − βXY`, `dY = −γY + δXY`, integrated with
/// fixed-step RK4 and read out at ten evenly spaced times.
#[derive(Debug, Clone, PartialEq)]
pub struct LvModel {
    pub prey0: f64,
    pub predator0: f64,
    pub horizon: f64,
    pub step: f64,
    pub n_obs: usize,
    pub log_noise: f64,
}

impl Default for LvModel {
    fn default() -> Self {
        LvModel {
            prey0: 30.0,
            predator0: 1.0,
            horizon: 20.0,
            step: 0.01,
            n_obs: 10,
            log_noise: 0.1,
        }
    }
}

/// The first integral `δX − γ ln X + βY − α ln Y`.
pub fn lv_first_integral(rates: &[f64; 4], prey: f64, predator: f64) -> f64 {
    let [alpha, beta, gamma, delta] = *rates;
    delta * prey - gamma * prey.ln() + beta * predator - alpha * predator.ln()
}

fn rates_array(rates: &[f64]) -> Result<[f64; 4]> {
    let r: [f64; 4] = rates.try_into().map_err(|_| Error::Dimension {
        what: "Lotka-Volterra rates",
        found: rates.len(),
        expected: 4,
    })?;
    Ok(r)
}

impl LvModel {
    /// Integrates from `(x0, y0)`, calling `on_step(t, [X, Y])` after each step.
    /// Non-negative rates are accepted so decoupled limits can be exercised.
    pub fn integrate_from(&self, rates: &[f64], x0: f64, y0: f64, mut on_step: impl FnMut(f64, [f64; 2])) -> Result<()> {
        let [alpha, beta, gamma, delta] = rates_array(rates)?;
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid(format!("rates must be non-negative: {rates:?}")));
        }
        super::record_call();
        let rhs = |s: [f64; 2]| [alpha * s[0] - beta * s[0] * s[1], -gamma * s[1] + delta * s[0] * s[1]];
        let h = self.step;
        let steps = (self.horizon / h).round() as usize;
        let mut s = [x0, y0];
        on_step(0.0, s);
        for k in 1..=steps {
            let k1 = rhs(s);
            let k2 = rhs([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
            let k3 = rhs([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
            let k4 = rhs([s[0] + h * k3[0], s[1] + h * k3[1]]);
            s[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            s[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            if !(s[0].is_finite() && s[1].is_finite()) || s[0].abs() > BLOWUP_LIMIT || s[1].abs() > BLOWUP_LIMIT {
                return Err(Error::Integration(format!("Lotka-Volterra blow-up at step {k}")));
            }
            if s[0] <= 0.0 || s[1] <= 0.0 {
                return Err(Error::Integration(format!("Lotka-Volterra population non-positive at step {k}")));
            }
            on_step(k as f64 * h, s);
        }
        Ok(())
    }

    /// Noise-free readout `[X(t_1..t_10), Y(t_1..t_10)]`.
    pub fn mean_observation(&self, rates: &[f64]) -> Result<Vec<f64>> {
        let steps = (self.horizon / self.step).round() as usize;
        let per_obs = steps / self.n_obs;
        let mut prey = Vec::with_capacity(self.n_obs);
        let mut pred = Vec::with_capacity(self.n_obs);
        let mut k = 0usize;
        self.integrate_from(rates, self.prey0, self.predator0, |_, s| {
            if k > 0 && k % per_obs == 0 && prey.len() < self.n_obs {
                prey.push(s[0]);
                pred.push(s[1]);
            }
            k += 1;
        })?;
        prey.extend(pred);
        Ok(prey)
    }

    pub fn simulate<R: Rng + ?Sized>(&self, rates: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        if rates.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::invalid(format!("rates must be positive: {rates:?}")));
        }
        let mean = self.mean_observation(rates)?;
        Ok(mean
            .into_iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m * (self.log_noise * z).exp()
            })
            .collect())
    }
}

pub fn simulate_lotka_volterra<R: Rng + ?Sized>(rates: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    LvModel::default().simulate(rates, rng)
}
