//! The two decision-making algorithms and action search.
//!
//! Seed streams derived from a training seed: 1 network init, 2 minibatch
//! order, 3 validation actions, 4 training actions.

pub mod actions;
pub mod bam;
pub mod config;
pub mod model_io;
pub mod npe;
pub mod train;

pub use actions::{argmin, optimize_action, ActionDistribution, ActionSpace, DEFAULT_GRID_POINTS};
pub use bam::{bam_expected_cost, random_actions, train_bam, train_bam_with, ActionEncoding, CostRegressor};
pub use config::{ActionMode, TrainConfig};
pub use npe::{mc_profile, mc_profile_with, npe_mc_expected_cost, npe_mc_profile, train_npe, McEstimate, PosteriorEstimator};
pub use train::{fit, EpochRecord, Rows, TrainSource, TrainingCurve};
