use rand::Rng;

use crate::domain::{Action, ActionKind, TaskId, Zone, ACTION_MAX, ACTION_MIN};
use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 1000;

/// Candidate actions searched for the minimum expected cost.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSpace {
    /// Sorted grid including both endpoints.
    Grid(Vec<f64>),
    Zones,
}

impl ActionSpace {
    pub fn grid(points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::invalid("an action grid needs at least two points"));
        }
        let step = (ACTION_MAX - ACTION_MIN) / (points - 1) as f64;
        let mut g: Vec<f64> = (0..points).map(|i| ACTION_MIN + i as f64 * step).collect();
        g[points - 1] = ACTION_MAX;
        Ok(ActionSpace::Grid(g))
    }

    pub fn for_task(task: TaskId) -> Self {
        match task.action_kind() {
            ActionKind::Continuous => ActionSpace::grid(DEFAULT_GRID_POINTS).unwrap(),
            ActionKind::Discrete => ActionSpace::Zones,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ActionSpace::Grid(g) => g.len(),
            ActionSpace::Zones => 3,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn action(&self, i: usize) -> Action {
        match self {
            ActionSpace::Grid(g) => Action::Continuous(g[i]),
            ActionSpace::Zones => Action::Zone(Zone::ALL[i]),
        }
    }

    pub fn actions(&self) -> Vec<Action> {
        (0..self.len()).map(|i| self.action(i)).collect()
    }
}

/// The action distribution `p(a)` used to train BAM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionDistribution {
    Uniform { lo: f64, hi: f64 },
    UniformZones,
}

impl ActionDistribution {
    pub fn for_task(task: TaskId) -> Self {
        match task.action_kind() {
            ActionKind::Continuous => ActionDistribution::Uniform {
                lo: ACTION_MIN,
                hi: ACTION_MAX,
            },
            ActionKind::Discrete => ActionDistribution::UniformZones,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        match *self {
            ActionDistribution::Uniform { lo, hi } => Action::Continuous(rng.random_range(lo..=hi)),
            ActionDistribution::UniformZones => Action::Zone(Zone::ALL[rng.random_range(0..3)]),
        }
    }
}

/// Index and value of the smallest entry; the first index wins ties.
pub fn argmin(values: &[f64]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("expected cost {v} at action index {i}")));
        }
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.ok_or_else(|| Error::invalid("empty action space"))
}

/// Grid or discrete search for the action with minimal value. Ties go to the
/// smallest action.
pub fn optimize_action(mut cost_at: impl FnMut(Action) -> Result<f64>, space: &ActionSpace) -> Result<(Action, f64)> {
    let values = space.actions().into_iter().map(&mut cost_at).collect::<Result<Vec<_>>>()?;
    let (i, v) = argmin(&values)?;
    Ok((space.action(i), v))
}
