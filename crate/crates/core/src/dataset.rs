//! Seeded datasets of prior-predictive pairs and their on-disk format.
//!
//! Binary layout (little-endian): `b"ABDM"`, `u16` version, `u8` task,
//! `u64` master seed, `u64` pair count, then for each pair the theta block
//! followed by the x block as `f64`.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::domain::{seeded_rng, split_seed, SimPair, TaskId};
use crate::envelope::{read_file, Reader, Writer};
use crate::error::{Error, Result};
use crate::simulators::{sample_joint, Prior};

pub const DATASET_MAGIC: &[u8; 4] = b"ABDM";
pub const DATASET_VERSION: u16 = 1;

/// Attempts per index before generation gives up on a task whose
/// simulator keeps failing.
const MAX_ATTEMPTS: usize = 1000;

/// Stream reserved for the train/validation permutation.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskId,
    pub master_seed: u64,
    pub pairs: Vec<SimPair>,
}

/// Index sets of the 90:10 split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl Dataset {
    /// Simulates `n` pairs. Pair `i` depends only on `split_seed(master_seed, i)`,
    /// so the result is independent of `jobs`.
    pub fn generate(task: TaskId, n: usize, master_seed: u64, jobs: usize) -> Result<Dataset> {
        let one = |i: usize| -> Result<SimPair> {
            let mut rng = seeded_rng(split_seed(master_seed, i as u64));
            let (theta, x) = sample_joint(task, &mut rng, MAX_ATTEMPTS)?;
            Ok(SimPair { theta, x })
        };
        let jobs = jobs.max(1).min(n.max(1));
        let pairs = if jobs == 1 {
            (0..n).map(one).collect::<Result<Vec<_>>>()?
        } else {
            let chunk = n.div_ceil(jobs);
            let parts: Vec<Result<Vec<SimPair>>> = std::thread::scope(|s| {
                let handles: Vec<_> = (0..jobs)
                    .map(|j| {
                        let one = &one;
                        s.spawn(move || (j * chunk..((j + 1) * chunk).min(n)).map(one).collect())
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("generation thread panicked")).collect()
            });
            let mut pairs = Vec::with_capacity(n);
            for p in parts {
                pairs.extend(p?);
            }
            pairs
        };
        Ok(Dataset { task, master_seed, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Deterministic 90:10 split driven by the master seed.
    pub fn split(&self, validation_fraction: f64) -> Split {
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut seeded_rng(split_seed(self.master_seed, SPLIT_STREAM)));
        let n_val = ((n as f64 * validation_fraction).round() as usize).clamp(usize::from(n > 1), n.saturating_sub(1));
        let validation = idx[..n_val].to_vec();
        let train = idx[n_val..].to_vec();
        Split { train, validation }
    }

    pub fn validate(&self) -> Result<()> {
        let (pd, od) = (self.task.param_dim(), self.task.obs_dim());
        let prior = Prior::for_task(self.task);
        for p in &self.pairs {
            if p.theta.len() != pd {
                return Err(Error::Dimension {
                    what: "theta",
                    found: p.theta.len(),
                    expected: pd,
                });
            }
            if p.x.len() != od {
                return Err(Error::Dimension {
                    what: "x",
                    found: p.x.len(),
                    expected: od,
                });
            }
            if !prior.contains(&p.theta) {
                return Err(Error::invalid(format!("theta {:?} outside prior support", p.theta)));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        Ok(self.writer().into_bytes())
    }

    fn writer(&self) -> Writer {
        let mut w = Writer::new(DATASET_MAGIC, DATASET_VERSION);
        w.u8(self.task as u8);
        w.u64(self.master_seed);
        w.u64(self.pairs.len() as u64);
        for p in &self.pairs {
            w.f64s(&p.theta);
            w.f64s(&p.x);
        }
        w
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Dataset> {
        let mut r = Reader::open(buf, DATASET_MAGIC, DATASET_VERSION)?;
        let tag = r.u8()?;
        let task = TaskId::from_u8(tag).ok_or_else(|| Error::Format(format!("unknown task tag {tag}")))?;
        let master_seed = r.u64()?;
        let count = r.u64()?;
        let row = task.param_dim() + task.obs_dim();
        let expected = count.checked_mul(row as u64 * 8);
        if expected != Some(r.remaining() as u64) {
            return Err(Error::Format(format!(
                "{} payload bytes cannot hold {count} {task} pairs of {row} values",
                r.remaining()
            )));
        }
        let mut pairs = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let theta = r.f64s(task.param_dim())?;
            let x = r.f64s(task.obs_dim())?;
            pairs.push(SimPair { theta, x });
        }
        r.finish()?;
        Ok(Dataset { task, master_seed, pairs })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate()?;
        self.writer().write_to(path)
    }

    pub fn read(path: &Path) -> Result<Dataset> {
        Dataset::from_bytes(&read_file(path)?)
    }

    /// Inspection-only CSV with header `theta_0,...,x_0,...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let header: Vec<String> = (0..self.task.param_dim())
            .map(|i| format!("theta_{i}"))
            .chain((0..self.task.obs_dim()).map(|i| format!("x_{i}")))
            .collect();
        writeln!(out, "{}", header.join(",")).unwrap();
        for p in &self.pairs {
            let row: Vec<String> = p.theta.iter().chain(&p.x).map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}
