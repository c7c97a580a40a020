//! Experiment harness: TOML configs, seeded multi-repetition runs on a worker
//! pool, per-run CSV traces, an aggregate JSON with bound verdicts, and SVG
//! charts.

pub mod bounds;
pub mod config;
pub mod error;
pub mod replay;
pub mod run;
pub mod selftest;
pub mod stats;
pub mod svg;

pub use bounds::BoundVerdict;
pub use config::{load_config, parse_config, ConfigError, Emit, ExperimentConfig};
pub use error::HarnessError;
pub use replay::{replay, ReplayReport};
pub use run::{derive_seed, run_experiment, Aggregate, ExperimentReport, RunSummary};
pub use stats::scaling_slope;

/// Reads an aggregate JSON written by [`run_experiment`].
pub fn load_aggregate(path: impl AsRef<std::path::Path>) -> Result<Aggregate, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
