use std::path::{Path, PathBuf};

use crate::costs::CostSpec;
use crate::domain::TaskId;

/// File locations under an output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn resolved_config(&self) -> PathBuf {
        self.root.join("resolved_config.toml")
    }

    pub fn dataset(&self, task: TaskId, budget: usize, seed: u64) -> PathBuf {
        self.root.join("data").join(task.name()).join(format!("n{budget}_s{seed}.bin"))
    }

    fn models(&self, ablation: bool) -> PathBuf {
        if ablation {
            self.root.join("models").join("ablation")
        } else {
            self.root.join("models")
        }
    }

    fn curves(&self, ablation: bool) -> PathBuf {
        if ablation {
            self.root.join("curves").join("ablation")
        } else {
            self.root.join("curves")
        }
    }

    pub fn npe_model(&self, task: TaskId, budget: usize, seed: u64, ablation: bool) -> PathBuf {
        self.models(ablation).join(task.name()).join(format!("npe_n{budget}_s{seed}.bin"))
    }

    pub fn npe_curve(&self, task: TaskId, budget: usize, seed: u64, ablation: bool) -> PathBuf {
        self.curves(ablation).join(task.name()).join(format!("npe_n{budget}_s{seed}.csv"))
    }

    /// `variant` distinguishes ablation action modes; empty for the main sweep.
    pub fn bam_model(&self, spec: &CostSpec, variant: &str, budget: usize, seed: u64) -> PathBuf {
        self.models(!variant.is_empty())
            .join(spec.task.name())
            .join(bam_stem(spec, variant, budget, seed) + ".bin")
    }

    pub fn bam_curve(&self, spec: &CostSpec, variant: &str, budget: usize, seed: u64) -> PathBuf {
        self.curves(!variant.is_empty())
            .join(spec.task.name())
            .join(bam_stem(spec, variant, budget, seed) + ".csv")
    }

    pub fn observations(&self, task: TaskId) -> PathBuf {
        self.root.join("observations").join(format!("{task}.csv"))
    }

    pub fn references(&self) -> PathBuf {
        self.root.join("refs")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.root.join("results")
    }

    pub fn results(&self) -> PathBuf {
        self.results_dir().join("results.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.results_dir().join("summary.csv")
    }

    pub fn simulator_calls(&self) -> PathBuf {
        self.results_dir().join("simulator_calls.csv")
    }

    pub fn training(&self) -> PathBuf {
        self.results_dir().join("training.csv")
    }

    pub fn ablation(&self) -> PathBuf {
        self.results_dir().join("ablation.csv")
    }

    pub fn profile(&self, label: &str) -> PathBuf {
        self.root.join("profiles").join(format!("{label}.csv"))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.report_dir().join(name)
    }
}

fn bam_stem(spec: &CostSpec, variant: &str, budget: usize, seed: u64) -> String {
    let mut s = format!("bam_{}", spec.label());
    if !variant.is_empty() {
        s.push('_');
        s.push_str(variant);
    }
    s + &format!("_n{budget}_s{seed}")
}

pub(crate) fn ensure_parent(path: &Path) -> crate::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    }
    Ok(())
}
