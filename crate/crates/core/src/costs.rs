//! Task cost functions `c(θ, a)`, all valued in `[0, 1]`.
//!
//! Continuous tasks share an inverted bell `1 − exp(−(θ̃ − ã)² / w²)` whose
//! width `w` depends on the rescaled parameter `θ̃`; parameter and action are
//! both mapped to `[0, 10]` first.

use crate::domain::{rescale_linear, Action, ActionKind, TaskId, Zone, ACTION_MAX, ACTION_MIN};
use crate::error::{Error, Result};
use crate::simulators::{classify_zone, Prior};

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Prior mass excluded on each side when an unbounded prior is mapped to `[0, 10]`.
pub const RESCALE_TAIL: f64 = 0.001;

/// Cost configuration for one decision task.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub task: TaskId,
    pub epsilon: f64,
    /// Marginal scored by the Lotka-Volterra cost; 0 for the other tasks.
    pub marginal: usize,
    /// Source interval mapped onto `[0, 10]` for `θ`.
    pub theta_range: (f64, f64),
}

impl CostSpec {
    pub fn new(task: TaskId) -> CostSpec {
        CostSpec::with_marginal(task, 0).expect("marginal 0 exists for every task")
    }

    pub fn with_marginal(task: TaskId, marginal: usize) -> Result<CostSpec> {
        let limit = if task == TaskId::LotkaVolterra { 4 } else { 1 };
        if marginal >= limit {
            return Err(Error::invalid(format!("marginal {marginal} out of range for {task}")));
        }
        let prior = Prior::for_task(task);
        let theta_range = match task {
            TaskId::Toy => (0.0, 5.0),
            TaskId::LinearGaussian | TaskId::LotkaVolterra => {
                let m = prior.marginals[marginal];
                (m.quantile(RESCALE_TAIL), m.quantile(1.0 - RESCALE_TAIL))
            }
            // SIR scores the ratio β/γ directly; BVEP uses zones.
            TaskId::Sir => (0.0, 10.0),
            TaskId::Bvep => (-5.0, -1.0),
        };
        Ok(CostSpec {
            task,
            epsilon: DEFAULT_EPSILON,
            marginal,
            theta_range,
        })
    }

    /// Short label, e.g. `toy` or `lotka_volterra_m2`.
    pub fn label(&self) -> String {
        if self.task == TaskId::LotkaVolterra {
            format!("{}_m{}", self.task, self.marginal)
        } else {
            self.task.to_string()
        }
    }

    /// All decision tasks defined on a simulator.
    pub fn all_for(task: TaskId) -> Vec<CostSpec> {
        if task == TaskId::LotkaVolterra {
            (0..4).map(|i| CostSpec::with_marginal(task, i).unwrap()).collect()
        } else {
            vec![CostSpec::new(task)]
        }
    }

    /// `c(θ, a)`.
    pub fn cost(&self, theta: &[f64], action: Action) -> Result<f64> {
        if theta.len() != self.task.param_dim() {
            return Err(Error::Dimension {
                what: "theta",
                found: theta.len(),
                expected: self.task.param_dim(),
            });
        }
        Ok(self.shape(theta)?.eval(self.action_value(action)?))
    }

    /// Numeric value of an action after checking it fits the task.
    pub fn action_value(&self, action: Action) -> Result<f64> {
        match (self.task.action_kind(), action) {
            (ActionKind::Continuous, Action::Continuous(a)) => {
                check_action(a)?;
                Ok(a)
            }
            (ActionKind::Discrete, Action::Zone(z)) => Ok(z.index() as f64),
            _ => Err(Error::invalid(format!("action {action:?} does not fit task {}", self.task))),
        }
    }

    /// Continuous-task cost without constructing an `Action`.
    pub fn cost_continuous(&self, theta: &[f64], a: f64) -> Result<f64> {
        self.cost(theta, Action::Continuous(a))
    }

    /// Decodes `θ` into the part of the cost that does not depend on the
    /// action, so a whole action grid can be scored cheaply.
    /// Only the coordinates the cost reads need to be present.
    pub fn shape(&self, theta: &[f64]) -> Result<CostShape> {
        let needed = match self.task {
            TaskId::Sir => 2,
            _ => self.marginal + 1,
        };
        if theta.len() < needed {
            return Err(Error::Dimension {
                what: "theta",
                found: theta.len(),
                expected: needed,
            });
        }
        let eps = self.epsilon;
        let (center, width) = match self.task {
            TaskId::Toy => {
                check_toy(theta[0])?;
                let t = 2.0 * theta[0];
                (t, 2.0 / (t.abs() + eps))
            }
            TaskId::LinearGaussian => {
                let t = self.rescale_theta(theta[0])?;
                (t, 0.5 / ((t - 5.0).abs() + eps))
            }
            TaskId::LotkaVolterra => {
                let t = self.rescale_theta(theta[self.marginal])?;
                (t, 3.0 / (t.abs() + eps))
            }
            TaskId::Sir => {
                let r = sir_ratio(theta[0], theta[1])?;
                (r, 2.0 / ((10.0 - (r - 1.0).abs()).abs() + eps))
            }
            TaskId::Bvep => return Ok(CostShape::Zone(classify_zone(theta[0]))),
        };
        Ok(CostShape::Bell { center, width })
    }

    /// `θ` mapped to the `[0, 10]` cost scale (the reproduction ratio for SIR).
    pub fn rescale_theta(&self, v: f64) -> Result<f64> {
        let (lo, hi) = self.theta_range;
        rescale_linear(v, lo, hi, 0.0, 10.0)
    }
}

/// Action-independent part of `c(θ, ·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostShape {
    /// `1 − exp(−(center − a/10)² / width²)`.
    Bell { center: f64, width: f64 },
    /// Zero exactly for the matching zone.
    Zone(Zone),
    /// The same cost for every action.
    Constant(f64),
}

impl CostShape {
    /// Cost of the action with numeric value `a` (zone index for discrete tasks).
    /// Range checks happen in `CostSpec::cost`.
    pub fn eval(&self, a: f64) -> f64 {
        match *self {
            CostShape::Bell { center, width } => {
                let d = (center - a / 10.0) / width;
                1.0 - (-d * d).exp()
            }
            CostShape::Zone(z) => {
                if z.index() as f64 == a {
                    0.0
                } else {
                    1.0
                }
            }
            CostShape::Constant(c) => c,
        }
    }
}

fn check_action(a: f64) -> Result<()> {
    if (ACTION_MIN..=ACTION_MAX).contains(&a) {
        Ok(())
    } else {
        Err(Error::OutOfSupport {
            value: a,
            support: "action range [0, 100]",
        })
    }
}

fn check_toy(theta: f64) -> Result<()> {
    if (0.0..=5.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::OutOfSupport {
            value: theta,
            support: "toy prior [0, 5]",
        })
    }
}

fn sir_ratio(beta: f64, gamma: f64) -> Result<f64> {
    if !(beta > 0.0 && gamma > 0.0) {
        return Err(Error::invalid(format!("SIR rates must be positive (got {beta}, {gamma})")));
    }
    Ok((beta / gamma).clamp(0.0, 10.0))
}

pub fn cost_toy(theta: f64, a: f64) -> Result<f64> {
    CostSpec::new(TaskId::Toy).cost_continuous(&[theta], a)
}

/// Scores coordinate 0 of the linear-Gaussian parameter.
pub fn cost_linear_gaussian(theta: &[f64], a: f64) -> Result<f64> {
    CostSpec::new(TaskId::LinearGaussian).cost_continuous(theta, a)
}

pub fn cost_lv_marginal(theta: &[f64], a: f64, marginal: usize) -> Result<f64> {
    CostSpec::with_marginal(TaskId::LotkaVolterra, marginal)?.cost(theta, Action::continuous(a)?)
}

pub fn cost_sir(beta: f64, gamma: f64, a: f64) -> Result<f64> {
    CostSpec::new(TaskId::Sir).cost_continuous(&[beta, gamma], a)
}

/// 0–1 misclassification cost of a zone decision.
pub fn cost_bvep(eta_gt: f64, action: Zone) -> f64 {
    if classify_zone(eta_gt) == action {
        0.0
    } else {
        1.0
    }
}

/// Cost of `action` at the ground-truth parameter.
pub fn incurred_cost(theta_gt: &[f64], action: Action, spec: &CostSpec) -> Result<f64> {
    spec.cost(theta_gt, action)
}
