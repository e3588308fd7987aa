use super::gaussian::GaussianPosterior;
use super::grid::GridPosterior;
use super::mcmc::McmcChain;
use super::quadrature::normal_grid_nodes;
use crate::costs::CostSpec;
use crate::domain::{Action, TaskId};
use crate::error::{Error, Result};

/// Nodes per Gaussian marginal.
pub const GAUSSIAN_NODES: usize = 4096;

/// A ground-truth posterior in any of the supported representations.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Grid(GridPosterior),
    Gaussian(GaussianPosterior),
    /// Equally weighted draws, e.g. from MCMC.
    Samples {
        task: TaskId,
        draws: Vec<Vec<f64>>,
    },
}

impl Reference {
    pub fn from_chain(task: TaskId, chain: &McmcChain) -> Self {
        Reference::Samples {
            task,
            draws: chain.draws().map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn task(&self) -> TaskId {
        match self {
            Reference::Grid(g) => g.task,
            Reference::Gaussian(g) => g.task,
            Reference::Samples { task, .. } => *task,
        }
    }

    /// Weighted parameter values whose weighted average is the posterior
    /// expectation. Gaussians use a dense midpoint rule along `marginal`, with
    /// the other coordinates at their means: the linear-Gaussian cost has a
    /// kink at the center of its scale, which Gauss-Hermite resolves poorly.
    pub fn weighted_points(&self, marginal: usize) -> Result<Vec<(Vec<f64>, f64)>> {
        Ok(match self {
            Reference::Grid(g) => (0..g.len())
                .filter(|&i| g.masses[i] > 0.0)
                .map(|i| (g.point(i).to_vec(), g.masses[i]))
                .collect(),
            Reference::Gaussian(g) => {
                if marginal >= g.mean.len() {
                    return Err(Error::invalid(format!("marginal {marginal} out of range")));
                }
                normal_grid_nodes(g.mean[marginal], g.variance[marginal].sqrt(), GAUSSIAN_NODES)
                    .into_iter()
                    .map(|(v, w)| {
                        let mut p = g.mean.clone();
                        p[marginal] = v;
                        (p, w)
                    })
                    .collect()
            }
            Reference::Samples { draws, .. } => {
                if draws.is_empty() {
                    return Err(Error::invalid("empty sample set"));
                }
                let w = 1.0 / draws.len() as f64;
                draws.iter().map(|d| (d.clone(), w)).collect()
            }
        })
    }

    /// `E[f(θ)]`; for Gaussians `f` must only depend on `marginal`.
    pub fn expectation(&self, marginal: usize, f: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
        self.weighted_points(marginal)?.iter().map(|(p, w)| Ok(w * f(p)?)).sum()
    }
}

fn check_task(post: &Reference, spec: &CostSpec) -> Result<()> {
    if post.task() != spec.task {
        return Err(Error::invalid(format!("cost for {} scored under a {} posterior", spec.task, post.task())));
    }
    Ok(())
}

/// `∫ c(θ, a) p(θ | x_o) dθ`.
pub fn expected_cost_oracle(post: &Reference, spec: &CostSpec, a: Action) -> Result<f64> {
    Ok(expected_cost_profile(post, spec, &[a])?[0])
}

/// Expected cost of every action, decoding each posterior point once.
pub fn expected_cost_profile(post: &Reference, spec: &CostSpec, actions: &[Action]) -> Result<Vec<f64>> {
    check_task(post, spec)?;
    let pts = post.weighted_points(spec.marginal)?;
    let shapes = pts.iter().map(|(p, w)| Ok((spec.shape(p)?, *w))).collect::<Result<Vec<_>>>()?;
    actions
        .iter()
        .map(|&a| {
            let v = spec.action_value(a)?;
            Ok(shapes.iter().map(|(s, w)| w * s.eval(v)).sum())
        })
        .collect()
}

/// `c(θ_gt, a_alg) − c(θ_gt, a_ref)`.
pub fn cost_gap(theta_gt: &[f64], a_alg: Action, a_ref: Action, spec: &CostSpec) -> Result<f64> {
    Ok(spec.cost(theta_gt, a_alg)? - spec.cost(theta_gt, a_ref)?)
}
