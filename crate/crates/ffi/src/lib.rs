//! C ABI over `bam-core`.
//!
//! Every fallible call returns a [`BamStatus`]; `BAM_OK` is zero. After a
//! failure, [`bam_last_error`] gives a message for the calling thread;
//! successful calls leave it untouched.
//! Objects are opaque handles created by `*_generate`, `*_read`, `*_train` or
//! `*_load` and released with the matching `*_free`. Tasks and zones are
//! passed as the `BAM_TASK_*` and `BAM_ZONE_*` integers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use bam_core::costs::CostSpec;
use bam_core::dataset::Dataset;
use bam_core::domain::{split_seed, Action, ActionKind, TaskId, Zone};
use bam_core::inference::{
    argmin, mc_profile, train_bam, train_npe, ActionDistribution, ActionMode, ActionSpace, CostRegressor, PosteriorEstimator, TrainConfig,
};
use bam_core::simulators::classify_zone;
use bam_core::Error;

pub const BAM_TASK_TOY: u8 = 0;
pub const BAM_TASK_LINEAR_GAUSSIAN: u8 = 1;
pub const BAM_TASK_SIR: u8 = 2;
pub const BAM_TASK_LOTKA_VOLTERRA: u8 = 3;
pub const BAM_TASK_BVEP: u8 = 4;

pub const BAM_ZONE_HEALTHY: u8 = 0;
pub const BAM_ZONE_PROPAGATION: u8 = 1;
pub const BAM_ZONE_EPILEPTOGENIC: u8 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BamStatus {
    BamOk = 0,
    BamNullPointer = 1,
    BamInvalidArgument = 2,
    BamIo = 3,
    BamFormat = 4,
    BamDimension = 5,
    BamOutOfSupport = 6,
    /// Non-finite values, divergence, integration or convergence failure.
    BamNumerical = 7,
    BamConfig = 8,
    BamBufferTooSmall = 9,
    BamPanic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BamStatus {
    match e {
        Error::Io { .. } => BamStatus::BamIo,
        Error::Format(_) | Error::Version { .. } | Error::Csv(_) => BamStatus::BamFormat,
        Error::Dimension { .. } => BamStatus::BamDimension,
        Error::InvalidArgument(_) => BamStatus::BamInvalidArgument,
        Error::OutOfSupport { .. } => BamStatus::BamOutOfSupport,
        Error::Integration(_) | Error::Divergence { .. } | Error::NonFinite(_) | Error::NonConvergence { .. } => BamStatus::BamNumerical,
        Error::Config(_) => BamStatus::BamConfig,
    }
}

struct Fail(BamStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> BamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BamStatus::BamOk,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            BamStatus::BamPanic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(BamStatus::BamNullPointer, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(BamStatus::BamInvalidArgument, msg.into())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid("path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn task(t: u8) -> Result<TaskId, Fail> {
    TaskId::from_u8(t).ok_or_else(|| invalid(format!("unknown task id {t}")))
}

fn action(t: TaskId, value: f64) -> Result<Action, Fail> {
    match t.action_kind() {
        ActionKind::Continuous => Ok(Action::continuous(value)?),
        ActionKind::Discrete => {
            let z = (value.fract() == 0.0 && value >= 0.0).then_some(value as usize).and_then(Zone::from_index);
            z.map(Action::Zone).ok_or_else(|| invalid(format!("{value} is not a zone index")))
        }
    }
}

/// Message of the last failed call on this thread, or NULL if none failed.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bam_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn bam_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Seed of stream `index` derived from `master`.
#[no_mangle]
pub extern "C" fn bam_split_seed(master: u64, index: u64) -> u64 {
    split_seed(master, index)
}

/// Zone index of an excitability value.
#[no_mangle]
pub extern "C" fn bam_classify_zone(eta: f64) -> u8 {
    classify_zone(eta).index() as u8
}

/// Parameter and observation dimensions of a task.
///
/// # Safety
/// `param_dim` and `obs_dim` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_task_dims(task_id: u8, param_dim: *mut usize, obs_dim: *mut usize) -> BamStatus {
    guard(|| {
        let t = task(task_id)?;
        *out(param_dim, "param_dim")? = t.param_dim();
        *out(obs_dim, "obs_dim")? = t.obs_dim();
        Ok(())
    })
}

/// `c(theta, a)`; `marginal` selects the Lotka-Volterra cost and is 0
/// otherwise. BVEP actions are zone indices.
///
/// # Safety
/// `theta` must point to `theta_len` doubles; `cost` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bam_cost(task_id: u8, marginal: usize, theta: *const f64, theta_len: usize, action_value: f64, cost: *mut f64) -> BamStatus {
    guard(|| {
        let t = task(task_id)?;
        let spec = CostSpec::with_marginal(t, marginal)?;
        let a = action(t, action_value)?;
        *out(cost, "cost")? = spec.cost(slice(theta, theta_len, "theta")?, a)?;
        Ok(())
    })
}

/// Training hyperparameters. `fixed_actions` of 0 resamples BAM actions
/// every epoch; `n > 0` draws `n` fixed actions per pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BamTrainOptions {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub components: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub mc_samples: usize,
    pub validation_actions: usize,
    pub fixed_actions: usize,
}

impl From<&TrainConfig> for BamTrainOptions {
    fn from(c: &TrainConfig) -> Self {
        BamTrainOptions {
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            validation_fraction: c.validation_fraction,
            max_epochs: c.max_epochs,
            patience: c.patience,
            components: c.components,
            hidden_units: c.hidden_units,
            hidden_layers: c.hidden_layers,
            mc_samples: c.mc_samples,
            validation_actions: c.validation_actions,
            fixed_actions: match c.action_mode {
                ActionMode::Resample => 0,
                ActionMode::Fixed(n) => n,
            },
        }
    }
}

impl BamTrainOptions {
    fn to_config(self) -> Result<TrainConfig, Fail> {
        let c = TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            validation_fraction: self.validation_fraction,
            max_epochs: self.max_epochs,
            patience: self.patience,
            action_mode: if self.fixed_actions == 0 {
                ActionMode::Resample
            } else {
                ActionMode::Fixed(self.fixed_actions)
            },
            mc_samples: self.mc_samples,
            components: self.components,
            hidden_units: self.hidden_units,
            hidden_layers: self.hidden_layers,
            validation_actions: self.validation_actions,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Default hyperparameters for a task.
///
/// # Safety
/// `options` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_train_options_default(task_id: u8, options: *mut BamTrainOptions) -> BamStatus {
    guard(|| {
        *out(options, "options")? = (&TrainConfig::for_task(task(task_id)?)).into();
        Ok(())
    })
}

unsafe fn train_options(p: *const BamTrainOptions, t: TaskId) -> Result<TrainConfig, Fail> {
    match p.as_ref() {
        Some(o) => o.to_config(),
        None => Ok(TrainConfig::for_task(t)),
    }
}

/// Opaque set of simulated `(theta, x)` pairs.
pub struct BamDataset(Dataset);

/// Opaque trained cost regressor.
pub struct BamRegressor(CostRegressor);

/// Opaque trained posterior estimator.
pub struct BamEstimator(PosteriorEstimator);

fn boxed<T>(v: T, dst: *mut *mut T) -> FfiResult {
    // SAFETY: callers check `dst` for NULL first.
    unsafe { *dst = Box::into_raw(Box::new(v)) };
    Ok(())
}

fn check_dst<T>(dst: *mut *mut T) -> FfiResult {
    if dst.is_null() {
        return Err(null("output handle"));
    }
    // SAFETY: non-NULL and documented as writable.
    unsafe { *dst = std::ptr::null_mut() };
    Ok(())
}

/// Simulates `n` prior-predictive pairs.
///
/// # Safety
/// `dataset` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_dataset_generate(task_id: u8, n: usize, seed: u64, jobs: usize, dataset: *mut *mut BamDataset) -> BamStatus {
    guard(|| {
        check_dst(dataset)?;
        boxed(BamDataset(Dataset::generate(task(task_id)?, n, seed, jobs)?), dataset)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `dataset` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_dataset_read(path: *const c_char, dataset: *mut *mut BamDataset) -> BamStatus {
    guard(|| {
        check_dst(dataset)?;
        boxed(BamDataset(Dataset::read(&path_arg(path)?)?), dataset)
    })
}

/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bam_dataset_write(dataset: *const BamDataset, path: *const c_char) -> BamStatus {
    guard(|| Ok(handle(dataset, "dataset")?.0.write(&path_arg(path)?)?))
}

/// Number of pairs, or 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bam_dataset_len(dataset: *const BamDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// Task id of the dataset.
///
/// # Safety
/// `dataset` must be a live handle; `task_id` writable.
#[no_mangle]
pub unsafe extern "C" fn bam_dataset_task(dataset: *const BamDataset, task_id: *mut u8) -> BamStatus {
    guard(|| {
        *out(task_id, "task_id")? = handle(dataset, "dataset")?.0.task as u8;
        Ok(())
    })
}

/// Copies pair `index` into caller buffers of at least the task dimensions.
///
/// # Safety
/// `theta` and `x` must be writable for `theta_cap` and `x_cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn bam_dataset_pair(dataset: *const BamDataset, index: usize, theta: *mut f64, theta_cap: usize, x: *mut f64, x_cap: usize) -> BamStatus {
    guard(|| {
        let d = &handle(dataset, "dataset")?.0;
        let p = d
            .pairs
            .get(index)
            .ok_or_else(|| invalid(format!("pair {index} out of range for {} pairs", d.len())))?;
        if theta_cap < p.theta.len() || x_cap < p.x.len() {
            return Err(Fail(
                BamStatus::BamBufferTooSmall,
                format!("need {} theta and {} x slots", p.theta.len(), p.x.len()),
            ));
        }
        if theta.is_null() || x.is_null() {
            return Err(null("output buffer"));
        }
        std::ptr::copy_nonoverlapping(p.theta.as_ptr(), theta, p.theta.len());
        std::ptr::copy_nonoverlapping(p.x.as_ptr(), x, p.x.len());
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bam_dataset_free(dataset: *mut BamDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Trains a cost regressor on `dataset`. `options` may be NULL for task defaults.
///
/// # Safety
/// `dataset` must be a live handle; `regressor` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_regressor_train(
    dataset: *const BamDataset,
    options: *const BamTrainOptions,
    marginal: usize,
    seed: u64,
    regressor: *mut *mut BamRegressor,
) -> BamStatus {
    guard(|| {
        check_dst(regressor)?;
        let d = &handle(dataset, "dataset")?.0;
        let cfg = train_options(options, d.task)?;
        let spec = CostSpec::with_marginal(d.task, marginal)?;
        let (reg, _) = train_bam(d, &cfg, ActionDistribution::for_task(d.task), &spec, seed)?;
        boxed(BamRegressor(reg), regressor)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `regressor` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_regressor_load(path: *const c_char, regressor: *mut *mut BamRegressor) -> BamStatus {
    guard(|| {
        check_dst(regressor)?;
        boxed(BamRegressor(CostRegressor::load(&path_arg(path)?)?), regressor)
    })
}

/// # Safety
/// `regressor` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bam_regressor_save(regressor: *const BamRegressor, path: *const c_char) -> BamStatus {
    guard(|| Ok(handle(regressor, "regressor")?.0.save(&path_arg(path)?)?))
}

/// Predicted expected cost of one action.
///
/// # Safety
/// `x` must point to `x_len` doubles; `cost` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bam_regressor_expected_cost(
    regressor: *const BamRegressor,
    x: *const f64,
    x_len: usize,
    action_value: f64,
    cost: *mut f64,
) -> BamStatus {
    guard(|| {
        let r = &handle(regressor, "regressor")?.0;
        *out(cost, "cost")? = r.expected_cost(slice(x, x_len, "x")?, action(r.task(), action_value)?)?;
        Ok(())
    })
}

/// Minimizer of the predicted expected cost over the default action grid.
///
/// # Safety
/// `x` must point to `x_len` doubles; `action` and `cost` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bam_regressor_optimal_action(
    regressor: *const BamRegressor,
    x: *const f64,
    x_len: usize,
    action_value: *mut f64,
    cost: *mut f64,
) -> BamStatus {
    guard(|| {
        let r = &handle(regressor, "regressor")?.0;
        let grid = ActionSpace::for_task(r.task()).actions();
        let (i, c) = argmin(&r.profile(slice(x, x_len, "x")?, &grid)?)?;
        *out(action_value, "action")? = grid[i].as_f64();
        *out(cost, "cost")? = c;
        Ok(())
    })
}

/// # Safety
/// `regressor` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bam_regressor_free(regressor: *mut BamRegressor) {
    if !regressor.is_null() {
        drop(Box::from_raw(regressor));
    }
}

/// Trains a posterior estimator on `dataset`. `options` may be NULL.
///
/// # Safety
/// `dataset` must be a live handle; `estimator` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_estimator_train(
    dataset: *const BamDataset,
    options: *const BamTrainOptions,
    seed: u64,
    estimator: *mut *mut BamEstimator,
) -> BamStatus {
    guard(|| {
        check_dst(estimator)?;
        let d = &handle(dataset, "dataset")?.0;
        let (est, _) = train_npe(d, &train_options(options, d.task)?, seed)?;
        boxed(BamEstimator(est), estimator)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `estimator` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bam_estimator_load(path: *const c_char, estimator: *mut *mut BamEstimator) -> BamStatus {
    guard(|| {
        check_dst(estimator)?;
        boxed(BamEstimator(PosteriorEstimator::load(&path_arg(path)?)?), estimator)
    })
}

/// # Safety
/// `estimator` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bam_estimator_save(estimator: *const BamEstimator, path: *const c_char) -> BamStatus {
    guard(|| Ok(handle(estimator, "estimator")?.0.save(&path_arg(path)?)?))
}

/// Draws `n` posterior samples into `samples` (row-major, `n * param_dim`).
///
/// # Safety
/// `x` must point to `x_len` doubles; `samples` writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn bam_estimator_sample(
    estimator: *const BamEstimator,
    x: *const f64,
    x_len: usize,
    n: usize,
    seed: u64,
    samples: *mut f64,
    capacity: usize,
) -> BamStatus {
    guard(|| {
        let e = &handle(estimator, "estimator")?.0;
        let need = n * e.task.param_dim();
        if capacity < need {
            return Err(Fail(BamStatus::BamBufferTooSmall, format!("need {need} slots")));
        }
        if samples.is_null() && need > 0 {
            return Err(null("samples"));
        }
        let draws = e.sample_seeded(slice(x, x_len, "x")?, n, seed)?;
        for (i, d) in draws.iter().enumerate() {
            std::ptr::copy_nonoverlapping(d.as_ptr(), samples.add(i * d.len()), d.len());
        }
        Ok(())
    })
}

/// Monte-Carlo expected cost of one action from `m` posterior draws.
///
/// # Safety
/// `x` must point to `x_len` doubles; `cost` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bam_estimator_expected_cost(
    estimator: *const BamEstimator,
    x: *const f64,
    x_len: usize,
    marginal: usize,
    action_value: f64,
    m: usize,
    seed: u64,
    cost: *mut f64,
) -> BamStatus {
    guard(|| {
        let e = &handle(estimator, "estimator")?.0;
        let spec = CostSpec::with_marginal(e.task, marginal)?;
        let samples = e.sample_seeded(slice(x, x_len, "x")?, m, seed)?;
        *out(cost, "cost")? = mc_profile(&samples, &[action(e.task, action_value)?], &spec)?[0];
        Ok(())
    })
}

/// NPE-MC decision over the default action grid, from one set of `m` draws.
///
/// # Safety
/// `x` must point to `x_len` doubles; `action` and `cost` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bam_estimator_optimal_action(
    estimator: *const BamEstimator,
    x: *const f64,
    x_len: usize,
    marginal: usize,
    m: usize,
    seed: u64,
    action_value: *mut f64,
    cost: *mut f64,
) -> BamStatus {
    guard(|| {
        let e = &handle(estimator, "estimator")?.0;
        let spec = CostSpec::with_marginal(e.task, marginal)?;
        let samples = e.sample_seeded(slice(x, x_len, "x")?, m, seed)?;
        let grid = ActionSpace::for_task(e.task).actions();
        let (i, c) = argmin(&mc_profile(&samples, &grid, &spec)?)?;
        *out(action_value, "action")? = grid[i].as_f64();
        *out(cost, "cost")? = c;
        Ok(())
    })
}

/// # Safety
/// `estimator` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bam_estimator_free(estimator: *mut BamEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}
