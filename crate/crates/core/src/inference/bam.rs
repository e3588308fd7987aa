//! Bayesian amortized decision making: regress realized costs on `(x, a)`.

use rand::Rng;

use super::actions::ActionDistribution;
use super::config::{ActionMode, TrainConfig};
use super::npe::MIN_TRAINING_PAIRS;
use super::train::{fit, Rows, TrainSource, TrainingCurve};
use crate::costs::{CostShape, CostSpec};
use crate::dataset::Dataset;
use crate::domain::{seeded_rng, split_seed, Action, ActionKind, TaskId, Zone, ACTION_MAX, ACTION_MIN};
use crate::error::{Error, Result};
use crate::nets::{LossKind, Mlp, MlpArch, Standardizer};

/// How an action enters the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionEncoding {
    /// `(a − mean) / std` with the moments of the action distribution.
    Scaled { mean: f64, std: f64 },
    /// One input per zone.
    OneHot,
}

impl ActionEncoding {
    pub fn for_distribution(dist: ActionDistribution) -> Self {
        match dist {
            ActionDistribution::Uniform { lo, hi } => ActionEncoding::Scaled {
                mean: 0.5 * (lo + hi),
                std: (hi - lo) / 12f64.sqrt(),
            },
            ActionDistribution::UniformZones => ActionEncoding::OneHot,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            ActionEncoding::Scaled { .. } => 1,
            ActionEncoding::OneHot => Zone::ALL.len(),
        }
    }

    pub fn encode_into(&self, a: Action, out: &mut Vec<f64>) -> Result<()> {
        match (*self, a) {
            (ActionEncoding::Scaled { mean, std }, Action::Continuous(v)) => out.push((v - mean) / std),
            (ActionEncoding::OneHot, Action::Zone(z)) => out.extend(Zone::ALL.iter().map(|&y| f64::from(u8::from(y == z)))),
            _ => return Err(Error::invalid(format!("action {a:?} does not match the regressor's encoding"))),
        }
        Ok(())
    }
}

/// A trained network `f(x, a) ≈ E[c(θ, a) | x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRegressor {
    pub spec: CostSpec,
    pub net: Mlp,
    pub x_norm: Standardizer,
    pub encoding: ActionEncoding,
    pub budget: usize,
}

impl CostRegressor {
    pub fn task(&self) -> TaskId {
        self.spec.task
    }

    fn push_input(&self, x: &[f64], a: Action, out: &mut Vec<f64>) -> Result<()> {
        if x.len() != self.task().obs_dim() {
            return Err(Error::Dimension {
                what: "observation",
                found: x.len(),
                expected: self.task().obs_dim(),
            });
        }
        self.spec.action_value(a)?;
        self.x_norm.apply_into(x, out);
        self.encoding.encode_into(a, out)
    }

    /// Network input for `(x, a)`.
    pub fn input(&self, x: &[f64], a: Action) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(self.net.arch().input_dim);
        self.push_input(x, a, &mut v)?;
        Ok(v)
    }

    pub fn expected_cost(&self, x: &[f64], a: Action) -> Result<f64> {
        Ok(self.net.forward(&self.input(x, a)?)?[0])
    }

    /// Expected costs of many actions in one batched forward pass.
    pub fn profile(&self, x: &[f64], actions: &[Action]) -> Result<Vec<f64>> {
        if actions.is_empty() {
            return Ok(Vec::new());
        }
        let mut inputs = Vec::with_capacity(actions.len() * self.net.arch().input_dim);
        for &a in actions {
            self.push_input(x, a, &mut inputs)?;
        }
        Ok(self.net.forward_batch(&inputs, actions.len())?.output)
    }
}

pub fn bam_expected_cost(reg: &CostRegressor, x_o: &[f64], a: Action) -> Result<f64> {
    reg.expected_cost(x_o, a)
}

/// Training rows for BAM: standardized observations with actions drawn
/// per epoch or fixed up front.
struct ActionRows {
    x: Vec<f64>,
    x_dim: usize,
    shapes: Vec<CostShape>,
    encoding: ActionEncoding,
    dist: ActionDistribution,
    mode: ActionMode,
    /// Per row: pair index and action, rebuilt each epoch in resample mode.
    rows: Vec<(usize, Action)>,
    action_seed: u64,
}

impl ActionRows {
    fn draw(&mut self, seed: u64, per_pair: usize) {
        let mut rng = seeded_rng(seed);
        self.rows.clear();
        for i in 0..self.shapes.len() {
            for _ in 0..per_pair {
                self.rows.push((i, self.dist.sample(&mut rng)));
            }
        }
    }
}

impl TrainSource for ActionRows {
    fn input_dim(&self) -> usize {
        self.x_dim + self.encoding.width()
    }

    fn target_dim(&self) -> usize {
        1
    }

    fn begin_epoch(&mut self, epoch: usize) -> usize {
        match self.mode {
            ActionMode::Resample => self.draw(split_seed(self.action_seed, epoch as u64), 1),
            ActionMode::Fixed(n) if self.rows.is_empty() => self.draw(self.action_seed, n),
            ActionMode::Fixed(_) => {}
        }
        self.rows.len()
    }

    fn fill(&self, rows: &[usize], inputs: &mut Vec<f64>, targets: &mut Vec<f64>) {
        for &r in rows {
            let (i, a) = self.rows[r];
            inputs.extend_from_slice(&self.x[i * self.x_dim..(i + 1) * self.x_dim]);
            self.encoding.encode_into(a, inputs).expect("actions come from the matching distribution");
            targets.push(self.shapes[i].eval(a.as_f64()));
        }
    }
}

/// Fits a cost regressor and returns it with its curve.
///
/// Validation uses `validation_actions` fixed actions per held-out pair,
/// independent of the training action mode.
pub fn train_bam(ds: &Dataset, cfg: &TrainConfig, dist: ActionDistribution, spec: &CostSpec, seed: u64) -> Result<(CostRegressor, TrainingCurve)> {
    train_bam_with(ds, cfg, dist, spec, seed, |theta| spec.shape(theta))
}

/// `train_bam` with the per-pair cost decoded by `shape_of`.
pub fn train_bam_with(
    ds: &Dataset,
    cfg: &TrainConfig,
    dist: ActionDistribution,
    spec: &CostSpec,
    seed: u64,
    shape_of: impl Fn(&[f64]) -> Result<CostShape>,
) -> Result<(CostRegressor, TrainingCurve)> {
    cfg.validate()?;
    if ds.len() < MIN_TRAINING_PAIRS {
        return Err(Error::invalid(format!("BAM needs at least {MIN_TRAINING_PAIRS} pairs, got {}", ds.len())));
    }
    if spec.task != ds.task {
        return Err(Error::invalid(format!("cost for {} applied to a {} dataset", spec.task, ds.task)));
    }
    let fits = match dist {
        ActionDistribution::Uniform { lo, hi } => ds.task.action_kind() == ActionKind::Continuous && ACTION_MIN <= lo && lo < hi && hi <= ACTION_MAX,
        ActionDistribution::UniformZones => ds.task.action_kind() == ActionKind::Discrete,
    };
    if !fits {
        return Err(Error::invalid("action distribution does not match the task's action space"));
    }
    ds.validate()?;
    let dx = ds.task.obs_dim();
    let split = ds.split(cfg.validation_fraction);
    let x_norm = Standardizer::fit(dx, split.train.iter().map(|&i| ds.pairs[i].x.as_slice()));
    let encoding = ActionEncoding::for_distribution(dist);
    let input_dim = dx + encoding.width();

    let mut x = Vec::with_capacity(split.train.len() * dx);
    let mut shapes = Vec::with_capacity(split.train.len());
    for &i in &split.train {
        x_norm.apply_into(&ds.pairs[i].x, &mut x);
        shapes.push(shape_of(&ds.pairs[i].theta)?);
    }
    let mut train = ActionRows {
        x,
        x_dim: dx,
        shapes,
        encoding,
        dist,
        mode: cfg.action_mode,
        rows: Vec::new(),
        action_seed: split_seed(seed, 4),
    };

    let mut validation = Rows::new(input_dim, 1);
    let mut rng = seeded_rng(split_seed(seed, 3));
    let mut input = Vec::with_capacity(input_dim);
    for &i in &split.validation {
        let p = &ds.pairs[i];
        let shape = shape_of(&p.theta)?;
        for _ in 0..cfg.validation_actions {
            let a = dist.sample(&mut rng);
            input.clear();
            x_norm.apply_into(&p.x, &mut input);
            encoding.encode_into(a, &mut input)?;
            validation.push(&input, &[shape.eval(a.as_f64())]);
        }
    }

    let arch = MlpArch {
        input_dim,
        hidden_units: cfg.hidden_units,
        hidden_layers: cfg.hidden_layers,
        output_dim: 1,
        squash: true,
    };
    let mut net = Mlp::init(arch, split_seed(seed, 1));
    let curve = fit(&mut net, LossKind::Mse, &mut train, &validation, cfg, split_seed(seed, 2))?;
    let reg = CostRegressor {
        spec: spec.clone(),
        net,
        x_norm,
        encoding,
        budget: ds.len(),
    };
    Ok((reg, curve))
}

/// Draws `n` actions from `dist`; used for random baselines.
pub fn random_actions<R: Rng + ?Sized>(dist: ActionDistribution, n: usize, rng: &mut R) -> Vec<Action> {
    (0..n).map(|_| dist.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SimPair;
    use crate::inference::actions::ActionSpace;

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            max_epochs: 60,
            patience: 15,
            learning_rate: 3e-3,
            batch_size: 100,
            ..Default::default()
        }
    }

    fn toy_regressor() -> CostRegressor {
        let ds = Dataset::generate(TaskId::Toy, 500, 2, 1).unwrap();
        let spec = CostSpec::new(TaskId::Toy);
        train_bam(&ds, &quick_cfg(), ActionDistribution::for_task(TaskId::Toy), &spec, 3).unwrap().0
    }

    #[test]
    fn output_is_bounded_and_deterministic() {
        let reg = toy_regressor();
        let mut rng = seeded_rng(1);
        for _ in 0..10_000 {
            let x = rng.random_range(-100.0..400.0);
            let a = Action::Continuous(rng.random_range(0.0..=100.0));
            let c = reg.expected_cost(&[x], a).unwrap();
            assert!(c > 0.0 && c < 1.0);
            assert_eq!(c, reg.expected_cost(&[x], a).unwrap());
        }
    }

    #[test]
    fn expected_cost_is_the_forward_pass_on_standardized_inputs() {
        let reg = toy_regressor();
        let (x, a) = (120.0, 37.5);
        let manual = [(x - reg.x_norm.mean[0]) / reg.x_norm.std[0], (a - 50.0) / (100.0 / 12f64.sqrt())];
        let want = reg.net.forward(&manual).unwrap()[0];
        assert_eq!(reg.expected_cost(&[x], Action::Continuous(a)).unwrap(), want);
        let prof = reg.profile(&[x], &ActionSpace::grid(7).unwrap().actions()).unwrap();
        for (p, a) in prof.iter().zip(ActionSpace::grid(7).unwrap().actions()) {
            assert!((p - reg.expected_cost(&[x], a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_cost_regression() {
        // x determines θ exactly and every cost is 0.4.
        let mut rng = seeded_rng(8);
        let pairs = (0..1000)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..5.0);
                SimPair { theta: vec![t], x: vec![t] }
            })
            .collect();
        let ds = Dataset {
            task: TaskId::Toy,
            master_seed: 1,
            pairs,
        };
        let spec = CostSpec::new(TaskId::Toy);
        let dist = ActionDistribution::for_task(TaskId::Toy);
        let (reg, _) = train_bam_with(&ds, &quick_cfg(), dist, &spec, 3, |_| Ok(CostShape::Constant(0.4))).unwrap();
        for i in 0..50 {
            let x = i as f64 / 10.0;
            for a in [0.0, 33.0, 100.0] {
                let c = reg.expected_cost(&[x], Action::Continuous(a)).unwrap();
                assert!((c - 0.4).abs() < 0.02, "f({x}, {a}) = {c}");
            }
        }
    }

    #[test]
    fn one_hot_encoding() {
        let mut v = Vec::new();
        ActionEncoding::OneHot.encode_into(Action::Zone(Zone::Propagation), &mut v).unwrap();
        assert_eq!(v, [0.0, 1.0, 0.0]);
        assert!(ActionEncoding::OneHot.encode_into(Action::Continuous(1.0), &mut v).is_err());
    }

    #[test]
    fn fixed_mode_reuses_actions() {
        let ds = Dataset::generate(TaskId::Toy, 200, 2, 1).unwrap();
        let spec = CostSpec::new(TaskId::Toy);
        let dist = ActionDistribution::for_task(TaskId::Toy);
        let mut src = ActionRows {
            x: ds.pairs.iter().map(|p| p.x[0]).collect(),
            x_dim: 1,
            shapes: ds.pairs.iter().map(|p| spec.shape(&p.theta).unwrap()).collect(),
            encoding: ActionEncoding::for_distribution(dist),
            dist,
            mode: ActionMode::Fixed(5),
            rows: Vec::new(),
            action_seed: 9,
        };
        assert_eq!(src.begin_epoch(1), 1000);
        let first = src.rows.clone();
        src.begin_epoch(2);
        assert_eq!(first, src.rows);
        src.mode = ActionMode::Resample;
        assert_eq!(src.begin_epoch(3), 200);
        let third = src.rows.clone();
        src.begin_epoch(4);
        assert_ne!(third, src.rows);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let ds = Dataset::generate(TaskId::Toy, 200, 2, 1).unwrap();
        let dist = ActionDistribution::for_task(TaskId::Toy);
        assert!(train_bam(&ds, &quick_cfg(), dist, &CostSpec::new(TaskId::Sir), 1).is_err());
        assert!(train_bam(&ds, &quick_cfg(), ActionDistribution::UniformZones, &CostSpec::new(TaskId::Toy), 1).is_err());
        let reg = toy_regressor();
        assert!(reg.expected_cost(&[1.0, 2.0], Action::Continuous(1.0)).is_err());
        assert!(reg.expected_cost(&[1.0], Action::Zone(Zone::Healthy)).is_err());
    }
}
