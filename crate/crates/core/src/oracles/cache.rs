//! On-disk cache of reference posteriors.

use std::path::{Path, PathBuf};

use super::expected::Reference;
use super::grid::GridPosterior;
use crate::domain::TaskId;
use crate::envelope::{fnv1a, read_file, Reader, Writer};
use crate::error::{Error, Result};

pub const REFERENCE_MAGIC: &[u8] = b"ABDM-REF";
pub const REFERENCE_VERSION: u16 = 1;

/// Key of a cached reference: task, observation, and a configuration digest.
pub fn cache_key(task: TaskId, obs_id: usize, x_o: &[f64], config: &[u8]) -> u64 {
    let mut b = vec![task as u8];
    b.extend((obs_id as u64).to_le_bytes());
    for v in x_o {
        b.extend(v.to_le_bytes());
    }
    b.extend(config);
    fnv1a(&b)
}

pub fn encode_reference(r: &Reference) -> Result<Vec<u8>> {
    let mut w = Writer::new(REFERENCE_MAGIC, REFERENCE_VERSION);
    match r {
        Reference::Grid(g) => {
            w.u8(0);
            w.u8(g.task as u8);
            w.u64(g.dim as u64);
            w.f64_vec(&g.points);
            w.f64_vec(&g.masses);
        }
        Reference::Samples { task, draws } => {
            let dim = draws.first().map_or(0, Vec::len);
            w.u8(1);
            w.u8(*task as u8);
            w.u64(dim as u64);
            w.f64_vec(&draws.concat());
        }
        Reference::Gaussian(_) => return Err(Error::invalid("analytic posteriors are not cached")),
    }
    Ok(w.into_bytes())
}

pub fn decode_reference(buf: &[u8]) -> Result<Reference> {
    let mut r = Reader::open(buf, REFERENCE_MAGIC, REFERENCE_VERSION)?;
    let kind = r.u8()?;
    let t = r.u8()?;
    let task = TaskId::from_u8(t).ok_or_else(|| Error::Format(format!("unknown task id {t}")))?;
    let dim = r.u64()? as usize;
    if dim != task.param_dim() {
        return Err(Error::Dimension {
            what: "reference dimension",
            found: dim,
            expected: task.param_dim(),
        });
    }
    let out = match kind {
        0 => {
            let points = r.f64_vec()?;
            let masses = r.f64_vec()?;
            if points.len() != masses.len() * dim {
                return Err(Error::Format("grid points and masses disagree".into()));
            }
            Reference::Grid(GridPosterior { task, dim, points, masses })
        }
        1 => {
            let flat = r.f64_vec()?;
            if flat.len() % dim != 0 {
                return Err(Error::Format("sample block is not a whole number of draws".into()));
            }
            Reference::Samples {
                task,
                draws: flat.chunks_exact(dim).map(<[f64]>::to_vec).collect(),
            }
        }
        k => return Err(Error::Format(format!("unknown reference kind {k}"))),
    };
    r.finish()?;
    Ok(out)
}

/// Directory of cached references, one file per key.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    pub dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache { dir: dir.into() }
    }

    fn path(&self, task: TaskId, key: u64) -> PathBuf {
        self.dir.join(format!("{task}-{key:016x}.ref"))
    }

    /// The cached reference, or `compute()` stored for next time.
    pub fn get_or_compute(&self, task: TaskId, key: u64, compute: impl FnOnce() -> Result<Reference>) -> Result<Reference> {
        let p = self.path(task, key);
        if p.exists() {
            return decode_reference(&read_file(&p)?);
        }
        let r = compute()?;
        crate::envelope::write_file(&p, &encode_reference(&r)?)?;
        Ok(r)
    }

    pub fn contains(&self, task: TaskId, key: u64) -> bool {
        Path::new(&self.path(task, key)).exists()
    }
}
