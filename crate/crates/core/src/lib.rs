//! Bandits with long-term constraints: an EXP-IX regret minimizer projected
//! onto optimistically estimated feasible sets, plus environments, exact
//! benchmarks, and metric pipelines.

pub mod algorithm;
pub mod benchmarks;
pub mod env;
pub mod error;
pub mod estimator;
pub mod metrics;
pub mod projection;
pub mod regret;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    bregman_divergence, derive_confidence_params, dot, ConfidenceParams, CostSample,
    ExperimentParams, FeasibleSet, RewardSample, Strategy, SIMPLEX_TOL,
};
