//! CSV row types shared by the evaluation and report stages.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::layout::ensure_parent;
use crate::domain::TaskId;
use crate::error::{Error, Result};

/// One decision on one observation. Oracle and random-baseline rows carry
/// budget 0 and seed 0; `gap` is empty where no reference action exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub algo: String,
    pub budget: usize,
    pub seed: u64,
    pub obs_id: usize,
    pub action: f64,
    pub expected_cost: Option<f64>,
    pub incurred_cost: f64,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub algo: String,
    pub budget: usize,
    pub seed: u64,
    pub obs_id: usize,
    pub action: f64,
    pub expected_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub algo: String,
    pub budget: usize,
    pub rows: usize,
    pub mean_incurred_cost: f64,
    pub mean_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallsRow {
    pub task: String,
    pub algo: String,
    pub budget: usize,
    pub seed: u64,
    pub observations: usize,
    pub simulator_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub task: String,
    pub algo: String,
    /// Action mode for BAM (`resample`, `fixed-N`), mixture components for NPE.
    pub setting: String,
    pub ablation: bool,
    pub budget: usize,
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub initial_validation_loss: f64,
    pub best_validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub task: String,
    pub algo: String,
    /// `resample`, `fixed-N`, or `m<samples>` for NPE-MC.
    pub setting: String,
    pub budget: usize,
    pub seed: u64,
    pub obs_id: usize,
    pub action: f64,
    pub incurred_cost: f64,
    pub gap: f64,
}

/// An evaluation observation with its ground-truth parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub obs_id: usize,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::Config(format!("missing input {}", path.display())));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_observations(path: &Path, task: TaskId, obs: &[Observation]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = std::iter::once("obs_id".to_string())
        .chain((0..task.param_dim()).map(|i| format!("theta_{i}")))
        .chain((0..task.obs_dim()).map(|i| format!("x_{i}")))
        .collect();
    w.write_record(&header)?;
    for o in obs {
        let rec: Vec<String> = std::iter::once(o.obs_id.to_string())
            .chain(o.theta.iter().chain(&o.x).map(f64::to_string))
            .collect();
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_observations(path: &Path, task: TaskId) -> Result<Vec<Observation>> {
    if !path.exists() {
        return Err(Error::Config(format!("missing input {}", path.display())));
    }
    let (pd, od) = (task.param_dim(), task.obs_dim());
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            if rec.len() != 1 + pd + od {
                return Err(Error::Format(format!(
                    "{}: expected {} columns, found {}",
                    path.display(),
                    1 + pd + od,
                    rec.len()
                )));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("{}: {e}", path.display())));
            let obs_id = rec[0].parse().map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
            let vals = rec.iter().skip(1).map(num).collect::<Result<Vec<_>>>()?;
            Ok(Observation {
                obs_id,
                theta: vals[..pd].to_vec(),
                x: vals[pd..].to_vec(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn result_rows_roundtrip_with_empty_gap() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rows = vec![
            ResultRow {
                task: "bvep".into(),
                algo: "random".into(),
                budget: 0,
                seed: 0,
                obs_id: 3,
                action: 2.0,
                expected_cost: None,
                incurred_cost: 1.0,
                gap: None,
            },
            ResultRow {
                task: "toy".into(),
                algo: "bam".into(),
                budget: 500,
                seed: 1,
                obs_id: 0,
                action: 41.5,
                expected_cost: Some(0.25),
                incurred_cost: 0.5,
                gap: Some(0.125),
            },
        ];
        write_rows(&p, &rows).unwrap();
        let head = std::fs::read_to_string(&p).unwrap();
        assert!(head.starts_with("task,algo,budget,seed,obs_id,action,expected_cost,incurred_cost,gap\n"));
        assert_eq!(read_rows::<ResultRow>(&p).unwrap(), rows);
    }

    #[test]
    fn observations_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.csv");
        let obs = vec![Observation {
            obs_id: 0,
            theta: vec![1.25],
            x: vec![-3.5],
        }];
        write_observations(&p, TaskId::Toy, &obs).unwrap();
        assert_eq!(read_observations(&p, TaskId::Toy).unwrap(), obs);
        assert!(read_observations(&p, TaskId::Sir).is_err());
    }
}
