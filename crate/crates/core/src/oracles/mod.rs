//! Ground-truth posteriors and reference expected costs.

pub mod cache;
pub mod expected;
pub mod gaussian;
pub mod grid;
pub mod mcmc;
pub mod quadrature;
pub mod sir;

pub use cache::{cache_key, ReferenceCache};
pub use expected::{cost_gap, expected_cost_oracle, expected_cost_profile, Reference};
pub use gaussian::{posterior_linear_gaussian, posterior_linear_gaussian_with, GaussianPosterior};
pub use grid::{posterior_quadrature_toy, GridPosterior, MIN_TOY_GRID};
pub use mcmc::{check_convergence, gelman_rubin, posterior_mcmc_lv, run_chains, ChainConfig, LogDensity, LvLogPosterior, McmcChain, Transition, RHAT_LIMIT};
pub use quadrature::{gauss_hermite, normal_expectation, normal_nodes, GAUSS_HERMITE_ORDER};
pub use sir::{posterior_grid_sir, SirGrid, SIR_GRID_SIZE};
