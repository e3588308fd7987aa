//! Binary model files.
//!
//! Layout after the `ABDM-NET` envelope: model kind `u8`, task `u8`, budget
//! `u64`, architecture (`u64` input, hidden units, hidden layers, output,
//! then `u8` squash), length-prefixed weights, the observation standardizer,
//! then the kind-specific tail.

use std::path::Path;

use super::bam::{ActionEncoding, CostRegressor};
use super::npe::PosteriorEstimator;
use crate::costs::CostSpec;
use crate::domain::TaskId;
use crate::envelope::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};
use crate::nets::{Mdn, Mlp, MlpArch, Standardizer};

pub const MODEL_MAGIC: &[u8] = b"ABDM-NET";
pub const MODEL_VERSION: u16 = 1;

const KIND_POSTERIOR: u8 = 0;
const KIND_REGRESSOR: u8 = 1;

fn write_header(w: &mut Writer, kind: u8, task: TaskId, budget: usize, net: &Mlp, x_norm: &Standardizer) {
    w.u8(kind);
    w.u8(task as u8);
    w.u64(budget as u64);
    let a = net.arch();
    for v in [a.input_dim, a.hidden_units, a.hidden_layers, a.output_dim] {
        w.u64(v as u64);
    }
    w.u8(u8::from(a.squash));
    w.f64_vec(net.params());
    write_standardizer(w, x_norm);
}

fn write_standardizer(w: &mut Writer, s: &Standardizer) {
    w.f64_vec(&s.mean);
    w.f64_vec(&s.std);
}

fn read_standardizer(r: &mut Reader<'_>, dim: usize) -> Result<Standardizer> {
    let mean = r.f64_vec()?;
    let std = r.f64_vec()?;
    if mean.len() != dim || std.len() != dim {
        return Err(Error::Dimension {
            what: "standardizer",
            found: mean.len(),
            expected: dim,
        });
    }
    if std.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Format("non-positive standardizer scale".into()));
    }
    Ok(Standardizer { mean, std })
}

fn small(r: &mut Reader<'_>, what: &str) -> Result<usize> {
    let v = r.u64()?;
    if v == 0 || v > 1 << 20 {
        return Err(Error::Format(format!("implausible {what} {v}")));
    }
    Ok(v as usize)
}

struct Header {
    kind: u8,
    task: TaskId,
    budget: usize,
    net: Mlp,
    x_norm: Standardizer,
}

fn read_header(r: &mut Reader<'_>) -> Result<Header> {
    let kind = r.u8()?;
    let t = r.u8()?;
    let task = TaskId::from_u8(t).ok_or_else(|| Error::Format(format!("unknown task id {t}")))?;
    let budget = r.u64()? as usize;
    let arch = MlpArch {
        input_dim: small(r, "input width")?,
        hidden_units: small(r, "hidden width")?,
        hidden_layers: small(r, "hidden depth")?,
        output_dim: small(r, "output width")?,
        squash: r.u8()? != 0,
    };
    let net = Mlp::from_params(arch, r.f64_vec()?)?;
    let x_norm = read_standardizer(r, task.obs_dim())?;
    Ok(Header {
        kind,
        task,
        budget,
        net,
        x_norm,
    })
}

fn expect_kind(h: &Header, kind: u8) -> Result<()> {
    if h.kind != kind {
        return Err(Error::Format(format!("model kind {} where {kind} was expected", h.kind)));
    }
    Ok(())
}

impl PosteriorEstimator {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MODEL_MAGIC, MODEL_VERSION);
        write_header(&mut w, KIND_POSTERIOR, self.task, self.budget, &self.mdn.net, &self.x_norm);
        w.u64(self.mdn.components as u64);
        write_standardizer(&mut w, &self.theta_norm);
        w.into_bytes()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::open(buf, MODEL_MAGIC, MODEL_VERSION)?;
        let h = read_header(&mut r)?;
        expect_kind(&h, KIND_POSTERIOR)?;
        let components = small(&mut r, "component count")?;
        let theta_norm = read_standardizer(&mut r, h.task.param_dim())?;
        r.finish()?;
        if h.net.arch().input_dim != h.task.obs_dim() {
            return Err(Error::Dimension {
                what: "network input",
                found: h.net.arch().input_dim,
                expected: h.task.obs_dim(),
            });
        }
        Ok(PosteriorEstimator {
            task: h.task,
            mdn: Mdn::from_net(h.net, components, h.task.param_dim())?,
            x_norm: h.x_norm,
            theta_norm,
            budget: h.budget,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

impl CostRegressor {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MODEL_MAGIC, MODEL_VERSION);
        write_header(&mut w, KIND_REGRESSOR, self.spec.task, self.budget, &self.net, &self.x_norm);
        w.u64(self.spec.marginal as u64);
        w.f64(self.spec.epsilon);
        match self.encoding {
            ActionEncoding::Scaled { mean, std } => {
                w.u8(0);
                w.f64(mean);
                w.f64(std);
            }
            ActionEncoding::OneHot => w.u8(1),
        }
        w.into_bytes()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::open(buf, MODEL_MAGIC, MODEL_VERSION)?;
        let h = read_header(&mut r)?;
        expect_kind(&h, KIND_REGRESSOR)?;
        let mut spec = CostSpec::with_marginal(h.task, r.u64()? as usize)?;
        spec.epsilon = r.f64()?;
        if !(spec.epsilon > 0.0) {
            return Err(Error::Format(format!("cost epsilon {} is not positive", spec.epsilon)));
        }
        let encoding = match r.u8()? {
            0 => ActionEncoding::Scaled { mean: r.f64()?, std: r.f64()? },
            1 => ActionEncoding::OneHot,
            e => return Err(Error::Format(format!("unknown action encoding {e}"))),
        };
        r.finish()?;
        let want = h.task.obs_dim() + encoding.width();
        if h.net.arch().input_dim != want || h.net.arch().output_dim != 1 {
            return Err(Error::Dimension {
                what: "network input",
                found: h.net.arch().input_dim,
                expected: want,
            });
        }
        Ok(CostRegressor {
            spec,
            net: h.net,
            x_norm: h.x_norm,
            encoding,
            budget: h.budget,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::inference::actions::ActionDistribution;
    use crate::inference::bam::train_bam;
    use crate::inference::config::TrainConfig;
    use crate::inference::npe::train_npe;

    fn cfg() -> TrainConfig {
        TrainConfig {
            max_epochs: 3,
            patience: 2,
            ..Default::default()
        }
    }

    #[test]
    fn estimator_roundtrip() {
        let ds = Dataset::generate(TaskId::Sir, 150, 1, 1).unwrap();
        let (est, _) = train_npe(&ds, &cfg(), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m/npe.bin");
        est.save(&p).unwrap();
        assert_eq!(PosteriorEstimator::load(&p).unwrap(), est);
        assert!(CostRegressor::load(&p).is_err());
    }

    #[test]
    fn regressor_roundtrip() {
        for task in [TaskId::LotkaVolterra, TaskId::Bvep] {
            let ds = Dataset::generate(task, 120, 1, 1).unwrap();
            let spec = CostSpec::all_for(task).pop().unwrap();
            let (reg, _) = train_bam(&ds, &cfg(), ActionDistribution::for_task(task), &spec, 2).unwrap();
            let back = CostRegressor::from_bytes(&reg.to_bytes()).unwrap();
            assert_eq!(back, reg);
        }
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let ds = Dataset::generate(TaskId::Toy, 150, 1, 1).unwrap();
        let (est, _) = train_npe(&ds, &cfg(), 2).unwrap();
        let bytes = est.to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(PosteriorEstimator::from_bytes(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[MODEL_MAGIC.len()] = 9;
        assert!(matches!(PosteriorEstimator::from_bytes(&bad), Err(Error::Version { .. })));
        assert!(PosteriorEstimator::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
