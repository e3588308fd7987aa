//! The generate, train and evaluate stages.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::config::ExperimentConfig;
use super::layout::{ensure_parent, Layout};
use super::records::*;
use crate::costs::CostSpec;
use crate::dataset::Dataset;
use crate::domain::{seeded_rng, split_seed, Action, ActionKind, TaskId, Zone, ACTION_MAX, ACTION_MIN};
use crate::error::{Error, Result};
use crate::inference::{
    argmin, mc_profile, train_bam, train_npe, ActionDistribution, ActionSpace, CostRegressor, PosteriorEstimator, TrainConfig, TrainingCurve,
};
use crate::oracles::{
    cache_key, expected_cost_profile, posterior_linear_gaussian, posterior_mcmc_lv, posterior_quadrature_toy, ChainConfig, Reference, ReferenceCache, SirGrid,
    SIR_GRID_SIZE,
};
use crate::simulators::{sample_joint, simulator_calls};

pub const TOY_REFERENCE_GRID: usize = 4096;
/// Actions per continuous expected-cost profile: 0, 1, ..., 100.
pub const PROFILE_POINTS: usize = 101;
/// MCMC reruns, each doubling the chain length, before a reference is given up.
pub const MCMC_RETRIES: usize = 2;

const DATA_STREAM: u64 = 0x_da7a;
const OBS_STREAM: u64 = 0x_0b5;
const MCMC_STREAM: u64 = 0x_3c3c;
const RANDOM_STREAM: u64 = 0x_4a4d;
const NPE_STREAM: u64 = 1_001;
const BAM_STREAM: u64 = 2_001;
const EVAL_STREAM: u64 = 3_001;
const JOINT_ATTEMPTS: usize = 1_000;

/// Seed of the dataset for one (task, budget, seed) cell.
pub fn dataset_seed(task: TaskId, budget: usize, seed: u64) -> u64 {
    split_seed(split_seed(seed, DATA_STREAM + task as u64), budget as u64)
}

pub fn npe_seed(task: TaskId, budget: usize, seed: u64) -> u64 {
    split_seed(dataset_seed(task, budget, seed), NPE_STREAM)
}

pub fn bam_seed(spec: &CostSpec, budget: usize, seed: u64) -> u64 {
    split_seed(dataset_seed(spec.task, budget, seed), BAM_STREAM + spec.marginal as u64)
}

/// Seed of the NPE posterior draws for one observation.
fn npe_eval_seed(task: TaskId, budget: usize, seed: u64, obs_id: usize) -> u64 {
    split_seed(split_seed(npe_seed(task, budget, seed), EVAL_STREAM), obs_id as u64)
}

fn log(stage: &str, msg: impl AsRef<str>) {
    eprintln!("[{stage}] {}", msg.as_ref());
}

/// Maps `f` over `items` on up to `jobs` threads; output order follows input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_inner().unwrap().into_iter().map(|r| r.expect("every item is processed")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cell {
    task: TaskId,
    budget: usize,
    seed: u64,
}

fn main_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut v = Vec::new();
    for &task in &cfg.tasks {
        for &budget in &cfg.budgets {
            for &seed in &cfg.seeds {
                v.push(Cell { task, budget, seed });
            }
        }
    }
    v
}

fn ablation_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    if !cfg.ablation.enabled {
        return Vec::new();
    }
    cfg.seeds
        .iter()
        .map(|&seed| Cell {
            task: cfg.ablation.task,
            budget: cfg.ablation.budget,
            seed,
        })
        .collect()
}

fn prepare(cfg: &ExperimentConfig) -> Result<Layout> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out);
    let p = layout.resolved_config();
    ensure_parent(&p)?;
    std::fs::write(&p, cfg.to_toml()?).map_err(|e| Error::io(&p, e))?;
    Ok(layout)
}

/// Simulates one dataset per (task, budget, seed), including the ablation cells.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<()> {
    let layout = prepare(cfg)?;
    let cells: Vec<Cell> = main_cells(cfg)
        .into_iter()
        .chain(ablation_cells(cfg))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    par_map(&cells, cfg.jobs, |c| {
        let ds = Dataset::generate(c.task, c.budget, dataset_seed(c.task, c.budget, c.seed), 1)?;
        ds.write(&layout.dataset(c.task, c.budget, c.seed))?;
        log("generate", format!("{} n={} seed={}", c.task, c.budget, c.seed));
        Ok(())
    })?;
    Ok(())
}

fn load_dataset(layout: &Layout, c: &Cell) -> Result<Dataset> {
    let p = layout.dataset(c.task, c.budget, c.seed);
    if !p.exists() {
        return Err(Error::Config(format!("missing dataset {}; run `generate` first", p.display())));
    }
    let ds = Dataset::read(&p)?;
    if ds.task != c.task || ds.len() != c.budget {
        return Err(Error::Format(format!("{} does not hold {} pairs of {}", p.display(), c.budget, c.task)));
    }
    Ok(ds)
}

#[derive(Debug, Clone)]
enum TrainJob {
    Main(Cell),
    AblationNpe(Cell),
    AblationBam(Cell, String),
}

fn training_row(task: TaskId, algo: &str, setting: String, ablation: bool, c: &Cell, curve: &TrainingCurve) -> TrainingRow {
    TrainingRow {
        task: task.name().into(),
        algo: algo.into(),
        setting,
        ablation,
        budget: c.budget,
        seed: c.seed,
        epochs: curve.epochs.len(),
        best_epoch: curve.best_epoch,
        initial_validation_loss: curve.initial_validation_loss,
        best_validation_loss: curve.best_validation_loss,
    }
}

fn train_one_npe(layout: &Layout, ds: &Dataset, tc: &TrainConfig, c: &Cell, ablation: bool) -> Result<TrainingRow> {
    let (est, curve) = train_npe(ds, tc, npe_seed(c.task, c.budget, c.seed))?;
    est.save(&layout.npe_model(c.task, c.budget, c.seed, ablation))?;
    curve.write_csv(&layout.npe_curve(c.task, c.budget, c.seed, ablation))?;
    log(
        "train",
        format!("{} n={} seed={} npe-mc: {} epochs", c.task, c.budget, c.seed, curve.epochs.len()),
    );
    Ok(training_row(c.task, "npe-mc", format!("k{}", tc.components), ablation, c, &curve))
}

fn train_one_bam(layout: &Layout, ds: &Dataset, tc: &TrainConfig, spec: &CostSpec, c: &Cell, variant: &str) -> Result<TrainingRow> {
    let (reg, curve) = train_bam(ds, tc, ActionDistribution::for_task(c.task), spec, bam_seed(spec, c.budget, c.seed))?;
    reg.save(&layout.bam_model(spec, variant, c.budget, c.seed))?;
    curve.write_csv(&layout.bam_curve(spec, variant, c.budget, c.seed))?;
    log(
        "train",
        format!(
            "{} n={} seed={} bam ({}, {}): {} epochs",
            spec.label(),
            c.budget,
            c.seed,
            tc.action_mode,
            if variant.is_empty() { "main" } else { variant },
            curve.epochs.len()
        ),
    );
    let mut row = training_row(c.task, "bam", tc.action_mode.to_string(), !variant.is_empty(), c, &curve);
    row.task = spec.label();
    Ok(row)
}

/// Trains every model of the sweep and the ablation; writes models,
/// per-epoch curves and a training summary.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<()> {
    let layout = prepare(cfg)?;
    let mut jobs: Vec<TrainJob> = main_cells(cfg).into_iter().map(TrainJob::Main).collect();
    for c in ablation_cells(cfg) {
        jobs.push(TrainJob::AblationNpe(c));
        for m in &cfg.ablation.action_modes {
            jobs.push(TrainJob::AblationBam(c, m.clone()));
        }
    }
    let rows = par_map(&jobs, cfg.jobs, |job| -> Result<Vec<TrainingRow>> {
        let mut out = Vec::new();
        match job {
            TrainJob::Main(c) => {
                let ds = load_dataset(&layout, c)?;
                let tc = cfg.train_config(c.task)?;
                if cfg.algo.runs_npe() {
                    out.push(train_one_npe(&layout, &ds, &tc, c, false)?);
                }
                if cfg.algo.runs_bam() {
                    for spec in CostSpec::all_for(c.task) {
                        out.push(train_one_bam(&layout, &ds, &tc, &spec, c, "")?);
                    }
                }
            }
            TrainJob::AblationNpe(c) => {
                let ds = load_dataset(&layout, c)?;
                out.push(train_one_npe(&layout, &ds, &cfg.train_config(c.task)?, c, true)?);
            }
            TrainJob::AblationBam(c, mode) => {
                let ds = load_dataset(&layout, c)?;
                let mut tc = cfg.train_config(c.task)?;
                tc.action_mode = mode.parse()?;
                out.push(train_one_bam(&layout, &ds, &tc, &CostSpec::new(c.task), c, mode)?);
            }
        }
        Ok(out)
    })?;
    write_rows(&layout.training(), &rows.concat())
}

/// Seeded evaluation observations `(θ_gt, x_o)` for a task.
pub fn generate_observations(task: TaskId, n: usize, observation_seed: u64) -> Result<Vec<Observation>> {
    let stream = split_seed(observation_seed, OBS_STREAM + task as u64);
    (0..n)
        .map(|i| {
            let (theta, x) = sample_joint(task, &mut seeded_rng(split_seed(stream, i as u64)), JOINT_ATTEMPTS)?;
            Ok(Observation { obs_id: i, theta, x })
        })
        .collect()
}

/// Actions at which expected-cost profiles are reported.
pub fn profile_actions(task: TaskId) -> Vec<Action> {
    match task.action_kind() {
        ActionKind::Continuous => (0..PROFILE_POINTS)
            .map(|i| Action::Continuous(ACTION_MIN + (ACTION_MAX - ACTION_MIN) * i as f64 / (PROFILE_POINTS - 1) as f64))
            .collect(),
        ActionKind::Discrete => Zone::ALL.map(Action::Zone).to_vec(),
    }
}

fn reference_key(task: TaskId, obs: &Observation, observation_seed: u64) -> Vec<u8> {
    match task {
        TaskId::Toy => format!("toy-grid-{TOY_REFERENCE_GRID}").into_bytes(),
        TaskId::Sir => format!("sir-grid-{SIR_GRID_SIZE}-refined").into_bytes(),
        TaskId::LotkaVolterra => lv_chain_config(observation_seed, obs.obs_id, 0).fingerprint(),
        _ => Vec::new(),
    }
}

fn lv_chain_config(observation_seed: u64, obs_id: usize, attempt: usize) -> ChainConfig {
    let base = ChainConfig::default();
    ChainConfig {
        burn_in: base.burn_in << attempt,
        samples: base.samples << attempt,
        seed: split_seed(split_seed(observation_seed, MCMC_STREAM), obs_id as u64),
        ..base
    }
}

fn lv_reference(x: &[f64], observation_seed: u64, obs_id: usize) -> Result<Reference> {
    let mut attempt = 0;
    loop {
        match posterior_mcmc_lv(x, &lv_chain_config(observation_seed, obs_id, attempt)) {
            Ok(chain) => return Ok(Reference::from_chain(TaskId::LotkaVolterra, &chain)),
            Err(Error::NonConvergence { .. }) if attempt < MCMC_RETRIES => {
                attempt += 1;
                log(
                    "evaluate",
                    format!("lotka_volterra obs {obs_id}: chains not mixed, retrying with {}x length", 1 << attempt),
                );
            }
            Err(e) => return Err(e),
        }
    }
}

/// Ground-truth posteriors of a task's observations, from the cache where
/// possible. `None` for tasks without a reference (BVEP).
pub fn references(task: TaskId, obs: &[Observation], layout: &Layout, observation_seed: u64, jobs: usize) -> Result<Option<Vec<Reference>>> {
    let cache = ReferenceCache::new(layout.references());
    let keys: Vec<u64> = obs
        .iter()
        .map(|o| cache_key(task, o.obs_id, &o.x, &reference_key(task, o, observation_seed)))
        .collect();
    let refs = match task {
        TaskId::Bvep => return Ok(None),
        TaskId::LinearGaussian => obs
            .iter()
            .map(|o| Ok(Reference::Gaussian(posterior_linear_gaussian(&o.x)?)))
            .collect::<Result<Vec<_>>>()?,
        TaskId::Toy => par_map(&(0..obs.len()).collect::<Vec<_>>(), jobs, |&i| {
            cache.get_or_compute(task, keys[i], || {
                Ok(Reference::Grid(posterior_quadrature_toy(obs[i].x[0], TOY_REFERENCE_GRID)?))
            })
        })?,
        TaskId::Sir => {
            let grid = if keys.iter().all(|&k| cache.contains(task, k)) {
                None
            } else {
                log("evaluate", "sir: building the prior-covering likelihood grid");
                Some(SirGrid::new(SIR_GRID_SIZE, jobs)?)
            };
            par_map(&(0..obs.len()).collect::<Vec<_>>(), jobs, |&i| {
                cache.get_or_compute(task, keys[i], || {
                    let g = grid.as_ref().expect("grid exists whenever a reference is missing");
                    Ok(Reference::Grid(g.posterior_refined(&obs[i].x, 1)?))
                })
            })?
        }
        TaskId::LotkaVolterra => par_map(&(0..obs.len()).collect::<Vec<_>>(), jobs, |&i| {
            cache.get_or_compute(task, keys[i], || lv_reference(&obs[i].x, observation_seed, obs[i].obs_id))
        })?,
    };
    Ok(Some(refs))
}

/// The reference decision for one observation and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDecision {
    pub action: Action,
    pub expected_cost: f64,
    /// Expected cost at each of `profile_actions`.
    pub profile: Vec<f64>,
}

pub fn reference_decision(post: &Reference, spec: &CostSpec) -> Result<ReferenceDecision> {
    let space = ActionSpace::for_task(spec.task);
    let grid = space.actions();
    let (i, expected_cost) = argmin(&expected_cost_profile(post, spec, &grid)?)?;
    Ok(ReferenceDecision {
        action: grid[i],
        expected_cost,
        profile: expected_cost_profile(post, spec, &profile_actions(spec.task))?,
    })
}

/// An algorithm's decision: chosen action, its estimated expected cost, and
/// the estimated profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub expected_cost: f64,
    pub profile: Vec<f64>,
}

fn decide(grid: &[Action], grid_costs: Vec<f64>, profile: Vec<f64>) -> Result<Decision> {
    let (i, expected_cost) = argmin(&grid_costs)?;
    Ok(Decision {
        action: grid[i],
        expected_cost,
        profile,
    })
}

/// NPE-MC decisions for every cost of the task from one set of `m` posterior draws.
pub fn npe_decisions(est: &PosteriorEstimator, x: &[f64], specs: &[CostSpec], m: usize, seed: u64) -> Result<Vec<Decision>> {
    let samples = est.sample_seeded(x, m, seed)?;
    let grid = ActionSpace::for_task(est.task).actions();
    let prof = profile_actions(est.task);
    specs
        .iter()
        .map(|spec| {
            if spec.task != est.task {
                return Err(Error::invalid(format!("cost for {} applied to a {} estimator", spec.task, est.task)));
            }
            decide(&grid, mc_profile(&samples, &grid, spec)?, mc_profile(&samples, &prof, spec)?)
        })
        .collect()
}

pub fn bam_decision(reg: &CostRegressor, x: &[f64]) -> Result<Decision> {
    let grid = ActionSpace::for_task(reg.task()).actions();
    decide(&grid, reg.profile(x, &grid)?, reg.profile(x, &profile_actions(reg.task()))?)
}

struct TaskEval {
    task: TaskId,
    obs: Vec<Observation>,
    specs: Vec<CostSpec>,
    /// `[spec][obs]`, absent for BVEP.
    reference: Option<Vec<Vec<ReferenceDecision>>>,
}

impl TaskEval {
    fn gap(&self, s: usize, o: usize, incurred: f64) -> Result<Option<f64>> {
        Ok(match &self.reference {
            Some(r) => Some(incurred - self.specs[s].cost(&self.obs[o].theta, r[s][o].action)?),
            None => None,
        })
    }
}

fn prepare_task(cfg: &ExperimentConfig, layout: &Layout, task: TaskId) -> Result<TaskEval> {
    let obs = generate_observations(task, cfg.observations_for(task), cfg.observation_seed)?;
    write_observations(&layout.observations(task), task, &obs)?;
    let specs = CostSpec::all_for(task);
    let reference = match references(task, &obs, layout, cfg.observation_seed, cfg.jobs)? {
        Some(refs) => Some(
            specs
                .iter()
                .map(|spec| par_map(&refs, cfg.jobs, |r| reference_decision(r, spec)))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    log("evaluate", format!("{task}: {} observations ready", obs.len()));
    Ok(TaskEval { task, obs, specs, reference })
}

fn missing_model(p: &std::path::Path) -> Error {
    Error::Config(format!("missing model {}; run `train` first", p.display()))
}

fn load_npe(layout: &Layout, c: &Cell, ablation: bool) -> Result<PosteriorEstimator> {
    let p = layout.npe_model(c.task, c.budget, c.seed, ablation);
    if !p.exists() {
        return Err(missing_model(&p));
    }
    PosteriorEstimator::load(&p)
}

fn load_bam(layout: &Layout, spec: &CostSpec, variant: &str, c: &Cell) -> Result<CostRegressor> {
    let p = layout.bam_model(spec, variant, c.budget, c.seed);
    if !p.exists() {
        return Err(missing_model(&p));
    }
    CostRegressor::load(&p)
}

#[derive(Default)]
struct CellOutput {
    rows: Vec<ResultRow>,
    /// Keyed by cost label.
    profiles: Vec<(String, ProfileRow)>,
    calls: Vec<CallsRow>,
}

impl CellOutput {
    fn record(&mut self, te: &TaskEval, s: usize, o: usize, algo: &str, c: &Cell, d: &Decision) -> Result<()> {
        let spec = &te.specs[s];
        let incurred = spec.cost(&te.obs[o].theta, d.action)?;
        self.rows.push(ResultRow {
            task: spec.label(),
            algo: algo.into(),
            budget: c.budget,
            seed: c.seed,
            obs_id: te.obs[o].obs_id,
            action: d.action.as_f64(),
            expected_cost: Some(d.expected_cost),
            incurred_cost: incurred,
            gap: te.gap(s, o, incurred)?,
        });
        for (a, v) in profile_actions(te.task).iter().zip(&d.profile) {
            self.profiles.push((
                spec.label(),
                ProfileRow {
                    algo: algo.into(),
                    budget: c.budget,
                    seed: c.seed,
                    obs_id: te.obs[o].obs_id,
                    action: a.as_f64(),
                    expected_cost: *v,
                },
            ));
        }
        Ok(())
    }
}

fn calls_row(task: TaskId, algo: &str, c: &Cell, observations: usize, calls: u64) -> CallsRow {
    CallsRow {
        task: task.name().into(),
        algo: algo.into(),
        budget: c.budget,
        seed: c.seed,
        observations,
        simulator_calls: calls,
    }
}

fn evaluate_cell(cfg: &ExperimentConfig, layout: &Layout, te: &TaskEval, c: &Cell) -> Result<CellOutput> {
    let mut out = CellOutput::default();
    if cfg.algo.runs_npe() {
        let est = load_npe(layout, c, false)?;
        let m = cfg.train_config(c.task)?.mc_samples;
        let before = simulator_calls();
        let decisions = te
            .obs
            .iter()
            .map(|o| npe_decisions(&est, &o.x, &te.specs, m, npe_eval_seed(c.task, c.budget, c.seed, o.obs_id)))
            .collect::<Result<Vec<_>>>()?;
        out.calls.push(calls_row(c.task, "npe-mc", c, te.obs.len(), simulator_calls() - before));
        for s in 0..te.specs.len() {
            for (o, d) in decisions.iter().enumerate() {
                out.record(te, s, o, "npe-mc", c, &d[s])?;
            }
        }
    }
    if cfg.algo.runs_bam() {
        let regs = te.specs.iter().map(|spec| load_bam(layout, spec, "", c)).collect::<Result<Vec<_>>>()?;
        let before = simulator_calls();
        let decisions = regs
            .iter()
            .map(|reg| te.obs.iter().map(|o| bam_decision(reg, &o.x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        out.calls.push(calls_row(c.task, "bam", c, te.obs.len(), simulator_calls() - before));
        for (s, ds) in decisions.iter().enumerate() {
            for (o, d) in ds.iter().enumerate() {
                out.record(te, s, o, "bam", c, d)?;
            }
        }
    }
    log("evaluate", format!("{} n={} seed={} done", c.task, c.budget, c.seed));
    Ok(out)
}

/// Oracle rows (zero gap) and, for tasks without a reference, a uniformly
/// random decision baseline.
fn baseline_rows(te: &TaskEval, observation_seed: u64) -> Result<CellOutput> {
    let mut out = CellOutput::default();
    let c0 = Cell {
        task: te.task,
        budget: 0,
        seed: 0,
    };
    match &te.reference {
        Some(refs) => {
            for (s, rs) in refs.iter().enumerate() {
                for (o, r) in rs.iter().enumerate() {
                    let d = Decision {
                        action: r.action,
                        expected_cost: r.expected_cost,
                        profile: r.profile.clone(),
                    };
                    out.record(te, s, o, "oracle", &c0, &d)?;
                }
            }
        }
        None => {
            let dist = ActionDistribution::for_task(te.task);
            let mut rng = seeded_rng(split_seed(observation_seed, RANDOM_STREAM + te.task as u64));
            for spec in &te.specs {
                for o in &te.obs {
                    let a = dist.sample(&mut rng);
                    out.rows.push(ResultRow {
                        task: spec.label(),
                        algo: "random".into(),
                        budget: 0,
                        seed: 0,
                        obs_id: o.obs_id,
                        action: a.as_f64(),
                        expected_cost: None,
                        incurred_cost: spec.cost(&o.theta, a)?,
                        gap: None,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn ablation_rows(cfg: &ExperimentConfig, layout: &Layout, te: &TaskEval, c: &Cell) -> Result<Vec<AblationRow>> {
    let spec = &te.specs[0];
    let refs = te
        .reference
        .as_ref()
        .ok_or_else(|| Error::Config(format!("ablation task {} has no reference posterior", te.task)))?;
    let mut rows = Vec::new();
    let mut push = |algo: &str, setting: String, o: usize, a: Action| -> Result<()> {
        let incurred = spec.cost(&te.obs[o].theta, a)?;
        rows.push(AblationRow {
            task: spec.label(),
            algo: algo.into(),
            setting,
            budget: c.budget,
            seed: c.seed,
            obs_id: te.obs[o].obs_id,
            action: a.as_f64(),
            incurred_cost: incurred,
            gap: incurred - spec.cost(&te.obs[o].theta, refs[0][o].action)?,
        });
        Ok(())
    };
    for mode in &cfg.ablation.action_modes {
        let reg = load_bam(layout, spec, mode, c)?;
        for (o, obs) in te.obs.iter().enumerate() {
            push("bam", mode.clone(), o, bam_decision(&reg, &obs.x)?.action)?;
        }
    }
    let est = load_npe(layout, c, true)?;
    for &m in &cfg.ablation.mc_samples {
        for (o, obs) in te.obs.iter().enumerate() {
            let d = npe_decisions(&est, &obs.x, std::slice::from_ref(spec), m, npe_eval_seed(c.task, c.budget, c.seed, obs.obs_id))?;
            push("npe-mc", format!("m{m}"), o, d[0].action)?;
        }
    }
    Ok(rows)
}

/// Mean incurred cost and gap per (cost, algorithm, budget).
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, usize), (usize, f64, f64, bool)> = BTreeMap::new();
    for r in rows {
        let g = groups.entry((r.task.clone(), r.algo.clone(), r.budget)).or_insert((0, 0.0, 0.0, true));
        g.0 += 1;
        g.1 += r.incurred_cost;
        match r.gap {
            Some(v) => g.2 += v,
            None => g.3 = false,
        }
    }
    groups
        .into_iter()
        .map(|((task, algo, budget), (n, inc, gap, has_gap))| SummaryRow {
            task,
            algo,
            budget,
            rows: n,
            mean_incurred_cost: inc / n as f64,
            mean_gap: has_gap.then(|| gap / n as f64),
        })
        .collect()
}

/// Decisions for every observation, reference and model: results, summary,
/// profiles, simulator-call counts, and the ablation table.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<()> {
    let layout = prepare(cfg)?;
    let mut tasks = cfg.tasks.clone();
    if cfg.ablation.enabled && !tasks.contains(&cfg.ablation.task) {
        tasks.push(cfg.ablation.task);
    }
    let evals: BTreeMap<TaskId, TaskEval> = tasks.iter().map(|&t| Ok((t, prepare_task(cfg, &layout, t)?))).collect::<Result<_>>()?;

    let cells = main_cells(cfg);
    let outputs = par_map(&cells, cfg.jobs, |c| evaluate_cell(cfg, &layout, &evals[&c.task], c))?;

    let mut results = Vec::new();
    let mut profiles: BTreeMap<String, Vec<ProfileRow>> = BTreeMap::new();
    let mut calls = Vec::new();
    for &task in &cfg.tasks {
        let base = baseline_rows(&evals[&task], cfg.observation_seed)?;
        results.extend(base.rows);
        for (label, p) in base.profiles {
            profiles.entry(label).or_default().push(p);
        }
        for (c, out) in cells.iter().zip(&outputs) {
            if c.task != task {
                continue;
            }
            results.extend(out.rows.iter().cloned());
            for (label, p) in &out.profiles {
                profiles.entry(label.clone()).or_default().push(p.clone());
            }
            calls.extend(out.calls.iter().cloned());
        }
    }
    write_rows(&layout.results(), &results)?;
    write_rows(&layout.summary(), &summarize(&results))?;
    write_rows(&layout.simulator_calls(), &calls)?;
    for (label, rows) in &profiles {
        write_rows(&layout.profile(label), rows)?;
    }

    let ab = ablation_cells(cfg);
    if !ab.is_empty() {
        let te = &evals[&cfg.ablation.task];
        let rows = par_map(&ab, cfg.jobs, |c| ablation_rows(cfg, &layout, te, c))?;
        write_rows(&layout.ablation(), &rows.concat())?;
    }
    Ok(())
}

/// The full pipeline.
pub fn cmd_all(cfg: &ExperimentConfig) -> Result<()> {
    cmd_generate(cfg)?;
    cmd_train(cfg)?;
    cmd_evaluate(cfg)?;
    super::report::cmd_report(cfg)
}
