//! Minibatch training with Adam and early stopping on validation loss.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use super::config::TrainConfig;
use crate::domain::{seeded_rng, split_seed};
use crate::error::{Error, Result};
use crate::nets::{grad_loss, loss, AdamState, Batch, LossKind, Mlp};

/// Rows scored per forward pass when evaluating validation loss.
const EVAL_CHUNK: usize = 4096;

/// Supplies training rows; may change them between epochs.
pub trait TrainSource {
    fn input_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    /// Prepares epoch `epoch` and returns its number of rows.
    fn begin_epoch(&mut self, epoch: usize) -> usize;
    /// Appends the inputs and targets of `rows`.
    fn fill(&self, rows: &[usize], inputs: &mut Vec<f64>, targets: &mut Vec<f64>);
}

/// A fixed set of rows held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Rows {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub input_dim: usize,
    pub target_dim: usize,
}

impl Rows {
    pub fn new(input_dim: usize, target_dim: usize) -> Self {
        Rows {
            inputs: Vec::new(),
            targets: Vec::new(),
            input_dim,
            target_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.target_dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, input: &[f64], target: &[f64]) {
        debug_assert_eq!(input.len(), self.input_dim);
        debug_assert_eq!(target.len(), self.target_dim);
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(target);
    }

    /// Mean loss, evaluated in chunks.
    pub fn mean_loss(&self, net: &Mlp, kind: LossKind) -> Result<f64> {
        let n = self.len();
        if n == 0 {
            return Err(Error::invalid("no rows to evaluate"));
        }
        let mut total = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + EVAL_CHUNK).min(n);
            let batch = Batch {
                inputs: &self.inputs[start * self.input_dim..end * self.input_dim],
                targets: &self.targets[start * self.target_dim..end * self.target_dim],
                len: end - start,
            };
            total += loss(net, &batch, kind)? * (end - start) as f64;
            start = end;
        }
        Ok(total / n as f64)
    }
}

impl TrainSource for Rows {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn begin_epoch(&mut self, _epoch: usize) -> usize {
        self.len()
    }

    fn fill(&self, rows: &[usize], inputs: &mut Vec<f64>, targets: &mut Vec<f64>) {
        for &r in rows {
            inputs.extend_from_slice(&self.inputs[r * self.input_dim..(r + 1) * self.input_dim]);
            targets.extend_from_slice(&self.targets[r * self.target_dim..(r + 1) * self.target_dim]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based; epoch 0 is the untrained network.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCurve {
    pub initial_validation_loss: f64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (0 if training never improved).
    pub best_epoch: usize,
    pub best_validation_loss: f64,
}

impl TrainingCurve {
    /// One row per completed epoch.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut out = String::from("epoch,train_loss,validation_loss\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.validation_loss));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(_) => Error::Divergence { epoch, loss: f64::NAN },
        other => other,
    }
}

/// Trains `net` in place and leaves it at the parameters with the lowest
/// validation loss seen, including the initial ones.
pub fn fit(net: &mut Mlp, kind: LossKind, source: &mut dyn TrainSource, validation: &Rows, cfg: &TrainConfig, shuffle_seed: u64) -> Result<TrainingCurve> {
    cfg.validate()?;
    if source.input_dim() != net.arch().input_dim || validation.input_dim != net.arch().input_dim {
        return Err(Error::Dimension {
            what: "training inputs",
            found: source.input_dim(),
            expected: net.arch().input_dim,
        });
    }
    let initial = validation.mean_loss(net, kind).map_err(|e| diverged(0, e))?;
    let mut curve = TrainingCurve {
        initial_validation_loss: initial,
        epochs: Vec::new(),
        best_epoch: 0,
        best_validation_loss: initial,
    };
    let mut best = net.params().to_vec();
    let mut adam = AdamState::new(best.len(), cfg.learning_rate);
    let (mut inputs, mut targets) = (Vec::new(), Vec::new());
    let mut order: Vec<usize> = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let rows = source.begin_epoch(epoch);
        if rows == 0 {
            return Err(Error::invalid("training set is empty"));
        }
        order.clear();
        order.extend(0..rows);
        order.shuffle(&mut seeded_rng(split_seed(shuffle_seed, epoch as u64)));

        let mut train_total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            inputs.clear();
            targets.clear();
            source.fill(chunk, &mut inputs, &mut targets);
            let batch = Batch {
                inputs: &inputs,
                targets: &targets,
                len: chunk.len(),
            };
            let (l, g) = grad_loss(net, &batch, kind).map_err(|e| diverged(epoch, e))?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { epoch, loss: l });
            }
            train_total += l * chunk.len() as f64;
            adam.step(net.params_mut(), &g);
        }
        let train_loss = train_total / rows as f64;
        let validation_loss = validation.mean_loss(net, kind).map_err(|e| diverged(epoch, e))?;
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: train_loss });
        }
        curve.epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
        });
        if validation_loss < curve.best_validation_loss {
            curve.best_validation_loss = validation_loss;
            curve.best_epoch = epoch;
            best.copy_from_slice(net.params());
        } else if epoch - curve.best_epoch >= cfg.patience {
            break;
        }
    }
    net.params_mut().copy_from_slice(&best);
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::MlpArch;
    use rand::Rng;

    fn linear_rows(n: usize, seed: u64) -> Rows {
        let mut rng = seeded_rng(seed);
        let mut rows = Rows::new(2, 1);
        for _ in 0..n {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            rows.push(&x, &[0.3 * x[0] - 0.7 * x[1] + 0.1]);
        }
        rows
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 50,
            max_epochs: 60,
            patience: 10,
            learning_rate: 3e-3,
            ..Default::default()
        }
    }

    #[test]
    fn regression_improves_and_keeps_best() {
        let mut train = linear_rows(400, 1);
        let val = linear_rows(100, 2);
        let mut net = Mlp::init(MlpArch::new(2, 1), 3);
        let curve = fit(&mut net, LossKind::Mse, &mut train, &val, &small_cfg(), 4).unwrap();
        assert!(curve.best_validation_loss <= curve.initial_validation_loss);
        assert!(curve.best_validation_loss < 0.01 * curve.initial_validation_loss.max(1e-3));
        let kept = val.mean_loss(&net, LossKind::Mse).unwrap();
        assert_eq!(kept, curve.best_validation_loss);
        let min = curve.epochs.iter().map(|r| r.validation_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(min, curve.best_validation_loss);
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let mut train = linear_rows(200, 1);
            let val = linear_rows(50, 2);
            let mut net = Mlp::init(MlpArch::new(2, 1), 3);
            let c = fit(&mut net, LossKind::Mse, &mut train, &val, &small_cfg(), 4).unwrap();
            (net, c)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn early_stopping_respects_patience() {
        // Targets are pure noise, so validation loss soon stops improving.
        let mut rng = seeded_rng(9);
        let mut train = Rows::new(2, 1);
        let mut val = Rows::new(2, 1);
        for i in 0..300 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let t = [rng.random_range(-1.0..1.0)];
            if i < 250 {
                train.push(&x, &t)
            } else {
                val.push(&x, &t)
            }
        }
        let cfg = TrainConfig {
            max_epochs: 400,
            ..small_cfg()
        };
        let mut net = Mlp::init(MlpArch::new(2, 1), 3);
        let curve = fit(&mut net, LossKind::Mse, &mut train, &val, &cfg, 4).unwrap();
        assert!(curve.epochs.len() < cfg.max_epochs);
        assert_eq!(curve.epochs.len(), curve.best_epoch + cfg.patience);
    }

    #[test]
    fn divergence_reports_epoch() {
        let mut train = linear_rows(100, 1);
        train.targets[5] = f64::INFINITY;
        let val = linear_rows(20, 2);
        let mut net = Mlp::init(MlpArch::new(2, 1), 3);
        match fit(&mut net, LossKind::Mse, &mut train, &val, &small_cfg(), 4) {
            Err(Error::Divergence { epoch, .. }) => assert_eq!(epoch, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn curve_csv_has_one_row_per_epoch() {
        let mut train = linear_rows(100, 1);
        let val = linear_rows(20, 2);
        let mut net = Mlp::init(MlpArch::new(2, 1), 3);
        let curve = fit(&mut net, LossKind::Mse, &mut train, &val, &small_cfg(), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("curve.csv");
        curve.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), curve.epochs.len() + 1);
    }
}
