use super::grid::{midpoints, GridPosterior};
use crate::domain::TaskId;
use crate::error::{Error, Result};
use crate::simulators::{Marginal, Prior, SirModel};

pub const SIR_GRID_SIZE: usize = 200;

/// Prior mass left out on each side of each rate axis.
const SIR_GRID_TAIL: f64 = 0.0005;

fn ln_normal_cdf(z: f64) -> f64 {
    if z < -30.0 {
        // Mills-ratio asymptote avoids log(0).
        -0.5 * z * z - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    } else {
        (0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)).ln()
    }
}

/// Log-likelihood of a clipped reading: readings at 0 or 1 carry the mass of
/// the clipped tail.
pub fn clipped_gaussian_ln_lik(obs: f64, mean: f64, sd: f64) -> f64 {
    if obs <= 0.0 {
        ln_normal_cdf((0.0 - mean) / sd)
    } else if obs >= 1.0 {
        ln_normal_cdf((mean - 1.0) / sd)
    } else {
        let r = (obs - mean) / sd;
        -0.5 * r * r - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Log posterior mass below the peak at which a cell counts as empty when
/// zooming in.
const ZOOM_LOG_MASS: f64 = 30.0;

/// Log-spaced grid in `(β, γ)` with the noise-free trajectories
/// precomputed, so posteriors for many observations share the ODE solves.
#[derive(Debug, Clone)]
pub struct SirGrid {
    pub model: SirModel,
    pub size: usize,
    /// Log-rate interval of each axis.
    pub bounds: [(f64, f64); 2],
    points: Vec<f64>,
    ln_prior_mass: Vec<f64>,
    means: Vec<Option<Vec<f64>>>,
}

impl SirGrid {
    /// Grid over the central 99.9% prior mass of each rate.
    pub fn new(size: usize, jobs: usize) -> Result<Self> {
        let prior = Prior::for_task(TaskId::Sir);
        let b = |m: Marginal| (m.quantile(SIR_GRID_TAIL).ln(), m.quantile(1.0 - SIR_GRID_TAIL).ln());
        Self::with_bounds(size, [b(prior.marginals[0]), b(prior.marginals[1])], jobs)
    }

    pub fn with_bounds(size: usize, bounds: [(f64, f64); 2], jobs: usize) -> Result<Self> {
        if size < 2 || bounds.iter().any(|(lo, hi)| !(hi > lo)) {
            return Err(Error::invalid("SIR grid needs at least two nodes per axis and non-empty bounds"));
        }
        let prior = Prior::for_task(TaskId::Sir);
        let axis = |k: usize| -> (Vec<f64>, Vec<f64>) {
            let Marginal::LogNormal { mu, sigma } = prior.marginals[k] else {
                unreachable!("SIR rates have lognormal priors")
            };
            let logs = midpoints(bounds[k].0, bounds[k].1, size);
            // Uniform cells in log space: prior mass ∝ normal density of ln θ.
            let lp = logs.iter().map(|l| -0.5 * ((l - mu) / sigma).powi(2)).collect();
            (logs.iter().map(|l| l.exp()).collect(), lp)
        };
        let (betas, lp_b) = axis(0);
        let (gammas, lp_g) = axis(1);
        let mut points = Vec::with_capacity(2 * size * size);
        let mut ln_prior_mass = Vec::with_capacity(size * size);
        for (b, lb) in betas.iter().zip(&lp_b) {
            for (g, lg) in gammas.iter().zip(&lp_g) {
                points.extend([*b, *g]);
                ln_prior_mass.push(lb + lg);
            }
        }
        let model = SirModel::default();
        let n = size * size;
        let solve = |i: usize| model.mean_observation(points[2 * i], points[2 * i + 1]).ok();
        let jobs = jobs.clamp(1, n);
        let means = if jobs == 1 {
            (0..n).map(solve).collect()
        } else {
            let chunk = n.div_ceil(jobs);
            std::thread::scope(|s| {
                let hs: Vec<_> = (0..jobs)
                    .map(|j| {
                        let solve = &solve;
                        s.spawn(move || (j * chunk..((j + 1) * chunk).min(n)).map(solve).collect::<Vec<_>>())
                    })
                    .collect();
                hs.into_iter().flat_map(|h| h.join().expect("SIR grid thread panicked")).collect()
            })
        };
        Ok(SirGrid {
            model,
            size,
            bounds,
            points,
            ln_prior_mass,
            means,
        })
    }

    /// Cell width on each log-rate axis.
    pub fn log_cell_width(&self) -> [f64; 2] {
        let w = |k: usize| (self.bounds[k].1 - self.bounds[k].0) / self.size as f64;
        [w(0), w(1)]
    }

    fn log_weights(&self, x_o: &[f64]) -> Result<Vec<f64>> {
        if x_o.len() != self.model.n_obs {
            return Err(Error::Dimension {
                what: "observation",
                found: x_o.len(),
                expected: self.model.n_obs,
            });
        }
        let sd = self.model.obs_noise_std;
        Ok(self
            .means
            .iter()
            .zip(&self.ln_prior_mass)
            .map(|(m, lp)| match m {
                Some(m) => lp + x_o.iter().zip(m).map(|(&o, &mu)| clipped_gaussian_ln_lik(o, mu, sd)).sum::<f64>(),
                None => f64::NEG_INFINITY,
            })
            .collect())
    }

    /// Posterior on this grid.
    pub fn posterior(&self, x_o: &[f64]) -> Result<GridPosterior> {
        let log_w = self.log_weights(x_o)?;
        GridPosterior::from_log_weights(TaskId::Sir, 2, self.points.clone(), &log_w)
    }

    /// Log-rate box around every cell within `ZOOM_LOG_MASS` of the peak,
    /// padded by one cell.
    pub fn occupied_bounds(&self, x_o: &[f64]) -> Result<[(f64, f64); 2]> {
        let log_w = self.log_weights(x_o)?;
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::invalid("the observation has zero likelihood at every grid node"));
        }
        let n = self.size;
        let (mut lo, mut hi) = ([n, n], [0usize, 0usize]);
        for (i, l) in log_w.iter().enumerate() {
            if *l > max - ZOOM_LOG_MASS {
                for (k, idx) in [i / n, i % n].into_iter().enumerate() {
                    lo[k] = lo[k].min(idx);
                    hi[k] = hi[k].max(idx);
                }
            }
        }
        let w = self.log_cell_width();
        Ok([0, 1].map(|k| {
            let a = lo[k].saturating_sub(1);
            let b = (hi[k] + 2).min(n);
            (self.bounds[k].0 + a as f64 * w[k], self.bounds[k].0 + b as f64 * w[k])
        }))
    }

    /// Posterior on a fresh grid of the same size zoomed onto the region
    /// this grid finds occupied.
    pub fn posterior_refined(&self, x_o: &[f64], jobs: usize) -> Result<GridPosterior> {
        SirGrid::with_bounds(self.size, self.occupied_bounds(x_o)?, jobs)?.posterior(x_o)
    }
}

/// Grid posterior for one observation: a `size × size` grid over the central
/// prior mass locates the posterior, and a second one of the same size
/// resolves it.
pub fn posterior_grid_sir(x_o: &[f64], size: usize) -> Result<GridPosterior> {
    SirGrid::new(size, 1)?.posterior_refined(x_o, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::seeded_rng;

    #[test]
    fn normalizes_and_recovers_truth() {
        let coarse = SirGrid::new(SIR_GRID_SIZE, 1).unwrap();
        // Truths near the prior mode: far from it the prior pulls the mode
        // along the likelihood ridge by more than a cell.
        for (b, g) in [(0.4, 0.125), (0.42, 0.13), (0.37, 0.12)] {
            let x = coarse.model.mean_observation(b, g).unwrap();
            let fine = SirGrid::with_bounds(SIR_GRID_SIZE, coarse.occupied_bounds(&x).unwrap(), 1).unwrap();
            // Cells of the prior-covering grid; the prior pulls the mode
            // along the likelihood ridge by a few fine cells.
            let [wb, wg] = coarse.log_cell_width();
            let post = fine.posterior(&x).unwrap();
            assert!((post.masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((coarse.posterior(&x).unwrap().masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let map = post.point(post.map_index());
            assert!((map[0].ln() - f64::ln(b)).abs() <= wb, "{map:?} vs {b} (cell {wb})");
            assert!((map[1].ln() - f64::ln(g)).abs() <= wg, "{map:?} vs {g} (cell {wg})");
        }
    }

    #[test]
    fn ratio_mean_converges_under_refinement() {
        let model = SirModel::default();
        let x = model.simulate(0.45, 0.12, &mut seeded_rng(3)).unwrap();
        let ratio = |n| posterior_grid_sir(&x, n).unwrap().expectation(|p| p[0] / p[1]);
        let (a, b) = (ratio(SIR_GRID_SIZE), ratio(2 * SIR_GRID_SIZE));
        assert!((a - b).abs() / b < 0.01, "{a} vs {b}");
    }

    #[test]
    fn clipped_readings_use_tail_mass() {
        assert!((clipped_gaussian_ln_lik(0.0, 0.0, 0.01) - 0.5f64.ln()).abs() < 1e-12);
        assert!((clipped_gaussian_ln_lik(1.0, 1.0, 0.01) - 0.5f64.ln()).abs() < 1e-12);
        assert!(clipped_gaussian_ln_lik(0.0, 0.9, 0.01).is_finite());
    }

    #[test]
    fn incompatible_observation_is_an_error() {
        let grid = SirGrid::new(4, 1).unwrap();
        assert!(grid.posterior(&[f64::NAN; 10]).is_err());
    }
}
