//! Experiment configuration: a TOML document with `[params]`, `[env]`,
//! `[learning_rate]` and optional `[estimator]` / `[projection]` tables.
//!
//! Validation runs every check and reports all failures together, each
//! tagged with the dotted path of the offending field.

use std::fmt;
use std::path::{Path, PathBuf};

use lcb_core::algorithm::RunConfig;
use lcb_core::env::EnvSpec;
use lcb_core::error::Error as CoreError;
use lcb_core::estimator::LearningRateSpec;
use lcb_core::projection::ProjectionConfig;
use lcb_core::ExperimentParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

/// Optional overrides of the `Γ` envelope constants.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorOverrides {
    pub gamma_cap_constant: Option<f64>,
    pub gamma_log_arg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ExperimentParams,
    pub env: EnvSpec,
    #[serde(default)]
    pub learning_rate: LearningRateSpec,
    #[serde(default)]
    pub estimator: EstimatorOverrides,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Horizons to run; empty means `[params.horizon]`.
    #[serde(default)]
    pub horizon_grid: Vec<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_emit")]
    pub emit: Vec<Emit>,
    /// Worker threads; `0` uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Draw charts on log-log axes.
    #[serde(default)]
    pub log_log_charts: bool,
}

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_emit() -> Vec<Emit> {
    vec![Emit::Csv, Emit::Json, Emit::Svg]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", format_errors(.0))]
    Invalid(Vec<FieldError>),
}

fn format_errors(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("  - {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl ConfigError {
    /// The validation failures, empty for I/O and parse errors.
    pub fn field_errors(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(errors) => errors,
            _ => &[],
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if config.horizon_grid.is_empty() {
        config.horizon_grid = vec![config.params.horizon];
    }
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let mut push = |field: &str, message: String| {
            errors.push(FieldError {
                field: field.to_string(),
                message,
            })
        };

        let p = &self.params;
        if p.horizon == 0 {
            push("params.horizon", "must be at least 1".into());
        }
        if p.actions == 0 {
            push("params.actions", "must be at least 1".into());
        }
        if p.constraints == 0 {
            push("params.constraints", "must be at least 1".into());
        }
        if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
            push("params.epsilon", format!("must lie in (0, 1), got {}", p.epsilon));
        }

        match self.env.validate() {
            Ok(()) => {
                if self.env.actions() != p.actions {
                    push(
                        "params.actions",
                        format!("env has {} actions, params say {}", self.env.actions(), p.actions),
                    );
                }
                if self.env.constraints() != p.constraints {
                    push(
                        "params.constraints",
                        format!(
                            "env has {} constraints, params say {}",
                            self.env.constraints(),
                            p.constraints
                        ),
                    );
                }
            }
            Err(e) => push(&core_field("env", &e), e.to_string()),
        }
        if let Err(e) = self.learning_rate.validate() {
            push(&core_field("learning_rate", &e), e.to_string());
        }
        if p.actions > 0 {
            if let Err(e) = self.projection.validate(p.actions) {
                push(&core_field("projection", &e), e.to_string());
            }
        }
        if let Some(c) = self.estimator.gamma_cap_constant {
            if !(c > 0.0 && c.is_finite()) {
                push("estimator.gamma_cap_constant", format!("must be positive, got {c}"));
            }
        }
        if let Some(l) = self.estimator.gamma_log_arg {
            if !(l > 0.0 && l.is_finite()) {
                push("estimator.gamma_log_arg", format!("must be positive, got {l}"));
            }
        }
        if self.repetitions == 0 {
            push("repetitions", "must be at least 1".into());
        }
        if self.horizon_grid.iter().any(|&t| t == 0) {
            push("horizon_grid", "horizons must be at least 1".into());
        }
        if self.horizon_grid.windows(2).any(|w| w[0] >= w[1]) {
            push("horizon_grid", "must be strictly ascending".into());
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn emits(&self, what: Emit) -> bool {
        self.emit.contains(&what)
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            lr_spec: self.learning_rate,
            projection: self.projection,
            gamma_cap_constant: self.estimator.gamma_cap_constant,
            gamma_log_arg: self.estimator.gamma_log_arg,
        }
    }
}

fn core_field(table: &str, e: &CoreError) -> String {
    match e {
        CoreError::InvalidParameter { field, .. } => format!("{table}.{field}"),
        _ => table.to_string(),
    }
}
