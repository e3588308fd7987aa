//! Config-driven experiment harness: datasets, training sweeps, evaluation
//! against reference posteriors, and report emission.
//!
//! Output layout under the configured directory:
//!
//! ```text
//! resolved_config.toml
//! data/<task>/n<budget>_s<seed>.bin
//! models/<task>/{npe,bam_<cost>}_n<budget>_s<seed>.bin   (models/ablation/... likewise)
//! curves/<task>/....csv                                   per-epoch losses
//! observations/<task>.csv                                 θ_gt and x_o per obs_id
//! refs/                                                   cached reference posteriors
//! results/{results,summary,simulator_calls,training,ablation}.csv
//! profiles/<cost>.csv
//! report/{gap_vs_budget,cost_profiles,bvep_zones,ablation}.{csv,svg}
//! ```

pub mod config;
pub mod layout;
pub mod pipeline;
pub mod records;
pub mod report;
pub mod svg;

pub use config::{AblationConfig, Algo, ExperimentConfig, TrainOverrides, DESK_BUDGETS, LARGE_BUDGETS};
pub use layout::Layout;
pub use pipeline::{
    bam_decision, cmd_all, cmd_evaluate, cmd_generate, cmd_train, dataset_seed, generate_observations, npe_decisions, profile_actions, reference_decision,
    references, summarize, Decision, ReferenceDecision,
};
pub use records::{AblationRow, CallsRow, Observation, ProfileRow, ResultRow, SummaryRow, TrainingRow};
pub use report::cmd_report;
