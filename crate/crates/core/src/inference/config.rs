use crate::domain::TaskId;
use crate::error::{Error, Result};

/// How BAM pairs actions with simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// One fresh action per `(θ, x)` pair every epoch.
    Resample,
    /// `n` actions drawn once per pair and reused every epoch.
    Fixed(usize),
}

impl std::fmt::Display for ActionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActionMode::Resample => f.write_str("resample"),
            ActionMode::Fixed(n) => write!(f, "fixed-{n}"),
        }
    }
}

impl std::str::FromStr for ActionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "resample" {
            return Ok(ActionMode::Resample);
        }
        s.strip_prefix("fixed-")
            .and_then(|n| n.parse().ok())
            .filter(|&n| n > 0)
            .map(ActionMode::Fixed)
            .ok_or_else(|| Error::Config(format!("action mode `{s}` is not `resample` or `fixed-<n>`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub action_mode: ActionMode,
    /// Posterior samples per observation for NPE-MC.
    pub mc_samples: usize,
    /// Mixture components of the density estimator.
    pub components: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    /// Actions per validation pair when scoring BAM.
    pub validation_actions: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 500,
            validation_fraction: 0.1,
            max_epochs: 500,
            patience: 20,
            action_mode: ActionMode::Resample,
            mc_samples: 1000,
            components: 5,
            hidden_units: 50,
            hidden_layers: 3,
            validation_actions: 10,
        }
    }
}

impl TrainConfig {
    /// Defaults, with the larger learning rate used for Lotka-Volterra.
    pub fn for_task(task: TaskId) -> Self {
        let mut cfg = TrainConfig::default();
        if task == TaskId::LotkaVolterra {
            cfg.learning_rate = 5e-3;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.mc_samples == 0 {
            return bad("batch size, epochs and MC samples must be positive");
        }
        if self.patience == 0 || self.patience >= self.max_epochs {
            return bad("patience must be positive and smaller than max epochs");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation fraction must lie in (0, 1)");
        }
        if self.components == 0 || self.hidden_units == 0 || self.validation_actions == 0 {
            return bad("components, hidden units and validation actions must be positive");
        }
        if let ActionMode::Fixed(0) = self.action_mode {
            return bad("fixed action count must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = TrainConfig::for_task(TaskId::Toy);
        cfg.validate().unwrap();
        assert_eq!(cfg.learning_rate, 1e-3);
        assert_eq!(cfg.batch_size, 500);
        assert_eq!(TrainConfig::for_task(TaskId::LotkaVolterra).learning_rate, 5e-3);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = TrainConfig::default();
        cfg.patience = cfg.max_epochs;
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            validation_fraction: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn action_mode_parsing() {
        assert_eq!("resample".parse::<ActionMode>().unwrap(), ActionMode::Resample);
        assert_eq!("fixed-5".parse::<ActionMode>().unwrap(), ActionMode::Fixed(5));
        assert!("fixed-0".parse::<ActionMode>().is_err());
        assert_eq!(ActionMode::Fixed(10).to_string(), "fixed-10");
    }
}
