//! Neural posterior estimation and the Monte-Carlo expected cost built on it.

use rand::Rng;

use super::config::TrainConfig;
use super::train::{fit, Rows, TrainingCurve};
use crate::costs::CostSpec;
use crate::dataset::Dataset;
use crate::domain::{seeded_rng, split_seed, Action, TaskId};
use crate::error::{Error, Result};
use crate::nets::{LossKind, Mdn, Mixture, Standardizer};
use crate::simulators::Prior;

/// Smallest dataset accepted for training.
pub const MIN_TRAINING_PAIRS: usize = 100;

/// Proposals drawn per requested sample before rejection sampling is abandoned.
const MAX_PROPOSALS_PER_SAMPLE: usize = 1000;
/// Rounds of restricted-mixture sampling before giving up on boundary draws.
const MAX_BOX_ROUNDS: usize = 10;

/// A trained conditional density `q(θ | x)`.
///
/// The mixture lives in standardized `θ` space; densities are mapped back
/// with the Jacobian of the standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEstimator {
    pub task: TaskId,
    pub mdn: Mdn,
    pub x_norm: Standardizer,
    pub theta_norm: Standardizer,
    /// Number of simulations the estimator was trained on.
    pub budget: usize,
}

impl PosteriorEstimator {
    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.task.obs_dim() {
            return Err(Error::Dimension {
                what: "observation",
                found: x.len(),
                expected: self.task.obs_dim(),
            });
        }
        Ok(())
    }

    /// The standardized-space mixture for `x`.
    pub fn mixture(&self, x: &[f64]) -> Result<Mixture> {
        self.check_x(x)?;
        self.mdn.mixture(&self.x_norm.apply(x))
    }

    /// `ln q(θ | x)` without truncation to the prior support.
    pub fn log_prob(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        let t = self.theta_norm.apply(theta);
        Ok(self.mdn.log_prob(&t, &self.x_norm.apply(x))? - self.theta_norm.log_scale())
    }

    /// Mean of the untruncated mixture.
    pub fn mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mix = self.mixture(x)?;
        let d = mix.theta_dim;
        let mut m = vec![0.0; d];
        for (k, w) in mix.weights().into_iter().enumerate() {
            for (j, mj) in m.iter_mut().enumerate() {
                *mj += w * mix.means[k * d + j];
            }
        }
        Ok(self.theta_norm.invert(&m))
    }

    /// `n` draws from `q(θ | x)` restricted to the prior support.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        let mix = self.mixture(x)?;
        let prior = Prior::for_task(self.task);
        let mut out = Vec::with_capacity(n);
        let mut proposals = 0usize;
        while out.len() < n && proposals < n * MAX_PROPOSALS_PER_SAMPLE {
            proposals += 1;
            let theta = self.theta_norm.invert(&mix.sample(rng));
            if prior.contains(&theta) {
                out.push(theta);
            }
        }
        if out.len() < n {
            // Too little mass inside the support for rejection; draw from
            // the restricted mixture directly.
            let (lo, hi): (Vec<f64>, Vec<f64>) = prior.marginals.iter().map(|m| m.bounds()).unzip();
            let lo = self.theta_norm.apply(&lo);
            let hi = self.theta_norm.apply(&hi);
            let mut attempts = 0;
            while out.len() < n {
                attempts += 1;
                let draws = mix
                    .sample_in_box(&lo, &hi, n - out.len(), rng)
                    .filter(|_| attempts <= MAX_BOX_ROUNDS)
                    .ok_or_else(|| Error::invalid("estimated posterior places no mass inside the prior support"))?;
                out.extend(draws.into_iter().map(|t| self.theta_norm.invert(&t)).filter(|t| prior.contains(t)));
            }
        }
        Ok(out)
    }

    /// Posterior samples for one `(x, M, seed)`; reused across an action grid.
    pub fn sample_seeded(&self, x: &[f64], m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.sample(x, m, &mut seeded_rng(seed))
    }
}

/// Fits the estimator by maximum likelihood and returns it with its curve.
pub fn train_npe(ds: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<(PosteriorEstimator, TrainingCurve)> {
    cfg.validate()?;
    if ds.len() < MIN_TRAINING_PAIRS {
        return Err(Error::invalid(format!("NPE needs at least {MIN_TRAINING_PAIRS} pairs, got {}", ds.len())));
    }
    ds.validate()?;
    let task = ds.task;
    let (dx, dt) = (task.obs_dim(), task.param_dim());
    let split = ds.split(cfg.validation_fraction);
    let x_norm = Standardizer::fit(dx, split.train.iter().map(|&i| ds.pairs[i].x.as_slice()));
    let theta_norm = Standardizer::fit(dt, split.train.iter().map(|&i| ds.pairs[i].theta.as_slice()));
    let rows = |idx: &[usize]| {
        let mut r = Rows::new(dx, dt);
        for &i in idx {
            let p = &ds.pairs[i];
            r.push(&x_norm.apply(&p.x), &theta_norm.apply(&p.theta));
        }
        r
    };
    let mut train = rows(&split.train);
    let validation = rows(&split.validation);

    let mut mdn = Mdn::new(dx, dt, cfg.components, cfg.hidden_units, cfg.hidden_layers, split_seed(seed, 1))?;
    let kind = LossKind::MixtureNll {
        components: cfg.components,
        theta_dim: dt,
    };
    let curve = fit(&mut mdn.net, kind, &mut train, &validation, cfg, split_seed(seed, 2))?;
    let est = PosteriorEstimator {
        task,
        mdn,
        x_norm,
        theta_norm,
        budget: ds.len(),
    };
    Ok((est, curve))
}

/// Monte-Carlo mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

impl McEstimate {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> McEstimate {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for v in values {
            n += 1;
            let d = v - mean;
            mean += d / n as f64;
            m2 += d * (v - mean);
        }
        let se = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { 0.0 };
        McEstimate { mean, standard_error: se }
    }
}

/// Average of an arbitrary cost over posterior samples, for every action.
pub fn mc_profile_with(samples: &[Vec<f64>], actions: &[Action], cost: impl Fn(&[f64], Action) -> Result<f64>) -> Result<Vec<McEstimate>> {
    if samples.is_empty() {
        return Err(Error::invalid("no posterior samples"));
    }
    actions
        .iter()
        .map(|&a| {
            let vals = samples.iter().map(|t| cost(t, a)).collect::<Result<Vec<_>>>()?;
            Ok(McEstimate::from_values(vals))
        })
        .collect()
}

/// Expected cost of every action under one shared sample set.
pub fn mc_profile(samples: &[Vec<f64>], actions: &[Action], spec: &CostSpec) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::invalid("no posterior samples"));
    }
    let dim = spec.task.param_dim();
    let shapes = samples
        .iter()
        .map(|s| {
            if s.len() != dim {
                return Err(Error::Dimension {
                    what: "theta",
                    found: s.len(),
                    expected: dim,
                });
            }
            spec.shape(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = shapes.len() as f64;
    actions
        .iter()
        .map(|&a| {
            let v = spec.action_value(a)?;
            Ok(shapes.iter().map(|s| s.eval(v)).sum::<f64>() / m)
        })
        .collect()
}

/// NPE-MC expected cost of one action.
pub fn npe_mc_expected_cost(est: &PosteriorEstimator, x_o: &[f64], a: Action, m: usize, spec: &CostSpec, seed: u64) -> Result<f64> {
    Ok(npe_mc_profile(est, x_o, &[a], m, spec, seed)?[0])
}

/// NPE-MC expected costs over an action grid from one set of `m` samples.
pub fn npe_mc_profile(est: &PosteriorEstimator, x_o: &[f64], actions: &[Action], m: usize, spec: &CostSpec, seed: u64) -> Result<Vec<f64>> {
    if spec.task != est.task {
        return Err(Error::invalid(format!("cost for {} applied to a {} estimator", spec.task, est.task)));
    }
    let samples = est.sample_seeded(x_o, m, seed)?;
    mc_profile(&samples, actions, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::actions::ActionSpace;

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            max_epochs: 40,
            patience: 10,
            learning_rate: 3e-3,
            batch_size: 100,
            ..Default::default()
        }
    }

    fn toy_estimator() -> PosteriorEstimator {
        let ds = Dataset::generate(TaskId::Toy, 600, 5, 1).unwrap();
        train_npe(&ds, &quick_cfg(), 1).unwrap().0
    }

    #[test]
    fn rejects_small_datasets() {
        let ds = Dataset::generate(TaskId::Toy, 50, 5, 1).unwrap();
        assert!(train_npe(&ds, &quick_cfg(), 1).is_err());
    }

    #[test]
    fn best_validation_not_worse_than_initial() {
        let ds = Dataset::generate(TaskId::Toy, 600, 5, 1).unwrap();
        let (_, curve) = train_npe(&ds, &quick_cfg(), 1).unwrap();
        assert!(curve.best_validation_loss <= curve.initial_validation_loss);
        assert!(!curve.epochs.is_empty());
    }

    #[test]
    fn samples_stay_in_prior_support() {
        let est = toy_estimator();
        let s = est.sample_seeded(&[114.0], 2000, 3).unwrap();
        assert!(s.iter().all(|t| (0.0..=5.0).contains(&t[0])));
        assert_eq!(s, est.sample_seeded(&[114.0], 2000, 3).unwrap());
    }

    #[test]
    fn samples_concentrate_at_the_boundary_when_mass_lies_outside() {
        let mut est = toy_estimator();
        est.theta_norm.mean[0] += 40.0 * est.theta_norm.std[0];
        let s = est.sample_seeded(&[114.0], 500, 4).unwrap();
        assert_eq!(s.len(), 500);
        assert!(s.iter().all(|t| (0.0..=5.0).contains(&t[0])));
        assert!(s.iter().map(|t| t[0]).sum::<f64>() / 500.0 > 4.5);
    }

    #[test]
    fn log_prob_includes_jacobian() {
        // Integrating the density in original units over a wide grid gives the
        // untruncated mass 1.
        let est = toy_estimator();
        let (lo, hi, n) = (-20.0, 25.0, 20_000);
        let h = (hi - lo) / n as f64;
        let mass: f64 = (0..n).map(|i| est.log_prob(&[lo + (i as f64 + 0.5) * h], &[90.0]).unwrap().exp() * h).sum();
        assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
    }

    #[test]
    fn constant_cost_is_reproduced_exactly() {
        let est = toy_estimator();
        let actions = ActionSpace::grid(50).unwrap().actions();
        for m in [1, 7, 100] {
            let s = est.sample_seeded(&[100.0], m, 11).unwrap();
            let p = mc_profile_with(&s, &actions, |_, _| Ok(0.3)).unwrap();
            assert!(p.iter().all(|e| e.mean == 0.3));
        }
    }

    #[test]
    fn profile_matches_pointwise_estimates() {
        let est = toy_estimator();
        let spec = CostSpec::new(TaskId::Toy);
        let actions = ActionSpace::grid(20).unwrap().actions();
        let prof = npe_mc_profile(&est, &[80.0], &actions, 300, &spec, 4).unwrap();
        for (a, p) in actions.iter().zip(&prof) {
            let single = npe_mc_expected_cost(&est, &[80.0], *a, 300, &spec, 4).unwrap();
            assert!((single - p).abs() < 1e-12);
            let direct = mc_profile_with(&est.sample_seeded(&[80.0], 300, 4).unwrap(), &[*a], |t, a| spec.cost(t, a)).unwrap();
            assert!((direct[0].mean - p).abs() < 1e-12);
        }
    }

    #[test]
    fn task_mismatch_is_rejected() {
        let est = toy_estimator();
        let spec = CostSpec::new(TaskId::Sir);
        assert!(npe_mc_expected_cost(&est, &[80.0], Action::Continuous(3.0), 10, &spec, 1).is_err());
    }

    #[test]
    fn standard_error_of_known_values() {
        let e = McEstimate::from_values([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.standard_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
