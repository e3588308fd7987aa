use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::TaskId;
use crate::error::{Error, Result};
use crate::inference::{ActionMode, TrainConfig};

pub const DESK_BUDGETS: [usize; 4] = [500, 1_000, 5_000, 10_000];
pub const LARGE_BUDGETS: [usize; 2] = [50_000, 100_000];

pub const DEFAULT_OBSERVATIONS: usize = 10;
pub const BVEP_OBSERVATIONS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    NpeMc,
    Bam,
    Both,
}

impl Algo {
    pub fn runs_npe(self) -> bool {
        matches!(self, Algo::NpeMc | Algo::Both)
    }

    pub fn runs_bam(self) -> bool {
        matches!(self, Algo::Bam | Algo::Both)
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npe-mc" => Ok(Algo::NpeMc),
            "bam" => Ok(Algo::Bam),
            "both" => Ok(Algo::Both),
            _ => Err(Error::Config(format!("unknown algorithm `{s}` (npe-mc, bam, both)"))),
        }
    }
}

/// Optional overrides of the per-task training defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub action_mode: Option<String>,
    pub mc_samples: Option<usize>,
    pub components: Option<usize>,
    pub hidden_units: Option<usize>,
    pub hidden_layers: Option<usize>,
    pub validation_actions: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, task: TaskId) -> Result<TrainConfig> {
        let mut c = TrainConfig::for_task(task);
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(
            learning_rate,
            batch_size,
            validation_fraction,
            max_epochs,
            patience,
            mc_samples,
            components,
            hidden_units,
            hidden_layers,
            validation_actions
        );
        if let Some(m) = &self.action_mode {
            c.action_mode = m.parse()?;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Actions-per-pair and Monte-Carlo sample-count sweep on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub enabled: bool,
    pub task: TaskId,
    pub budget: usize,
    pub action_modes: Vec<String>,
    pub mc_samples: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            enabled: false,
            task: TaskId::Toy,
            budget: 5_000,
            action_modes: ["fixed-1", "fixed-5", "fixed-10", "fixed-100", "resample"].map(String::from).to_vec(),
            mc_samples: vec![10, 100, 1_000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub tasks: Vec<TaskId>,
    pub algo: Algo,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Evaluation observations per task; `None` picks the task default.
    pub observations: Option<usize>,
    /// Master seed of the evaluation observations, shared by all training seeds.
    pub observation_seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    /// Permits the 50k and 100k budgets.
    pub large_budgets: bool,
    pub train: TrainOverrides,
    pub ablation: AblationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            tasks: vec![TaskId::Toy],
            algo: Algo::Both,
            budgets: DESK_BUDGETS.to_vec(),
            seeds: vec![0, 1, 2],
            observations: None,
            observation_seed: 7,
            out: PathBuf::from("runs"),
            jobs: 1,
            large_budgets: false,
            train: TrainOverrides::default(),
            ablation: AblationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn observations_for(&self, task: TaskId) -> usize {
        self.observations
            .unwrap_or(if task == TaskId::Bvep { BVEP_OBSERVATIONS } else { DEFAULT_OBSERVATIONS })
    }

    pub fn train_config(&self, task: TaskId) -> Result<TrainConfig> {
        self.train.apply(task)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.tasks.is_empty() {
            return bad("at least one task is required".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.budgets.is_empty() {
            return bad("at least one budget is required".into());
        }
        if !self.budgets.windows(2).all(|w| w[0] < w[1]) {
            return bad(format!("budgets must be strictly ascending: {:?}", self.budgets));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        for &b in &self.budgets {
            let desk = DESK_BUDGETS.contains(&b);
            let large = LARGE_BUDGETS.contains(&b);
            if !desk && !large {
                return bad(format!("budget {b} is not one of 500, 1000, 5000, 10000, 50000, 100000"));
            }
            if large && !self.large_budgets {
                return bad(format!("budget {b} needs `large_budgets = true` (or --large-budgets)"));
            }
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if self.observations == Some(0) {
            return bad("observations must be positive".into());
        }
        for &t in &self.tasks {
            self.train_config(t)?;
        }
        if self.ablation.enabled {
            let a = &self.ablation;
            if a.task.action_kind() != crate::domain::ActionKind::Continuous {
                return bad("the ablation runs on a continuous-action task".into());
            }
            if a.action_modes.is_empty() || a.mc_samples.is_empty() || a.mc_samples.contains(&0) {
                return bad("ablation needs action modes and positive sample counts".into());
            }
            for m in &a.action_modes {
                m.parse::<ActionMode>()?;
            }
            if !DESK_BUDGETS.contains(&a.budget) && !(self.large_budgets && LARGE_BUDGETS.contains(&a.budget)) {
                return bad(format!("ablation budget {} is not allowed", a.budget));
            }
        }
        Ok(())
    }
}
