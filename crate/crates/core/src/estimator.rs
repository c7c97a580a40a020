//! Optimistic constraint estimator.
//!
//! Estimates are weighted means of the observed costs of each action,
//! maintained recursively as online-gradient steps
//! `ĝ ← ĝ + η (g − ĝ)`. The learning rate `η` selects the weighting: `1/n`
//! gives the empirical mean, a constant gives exponential forgetting, and the
//! adaptive rate `(1 + Γ)/n` speeds up tracking once cumulative violation
//! outgrows its confidence envelope.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::types::{ExperimentParams, FeasibleSet};

/// Multiplier of the violation envelope `21·√(K t log(1/δ2))` behind `Γ`.
pub const DEFAULT_GAMMA_CAP_CONSTANT: f64 = 21.0;

/// Largest possible deviation between an estimate and a cost in `[-1, 1]`.
pub const MAX_BONUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LearningRateSpec {
    /// `η = min(1, (1 + Γ)/n)`.
    Adaptive,
    /// `η = 1/n`.
    EmpiricalMean,
    /// `η = eta` after the first play.
    Exponential { eta: f64 },
    /// `η = n^(−exponent)`.
    Custom { exponent: f64 },
}

impl Default for LearningRateSpec {
    fn default() -> Self {
        Self::Adaptive
    }
}

impl LearningRateSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { eta } if !(eta > 0.0 && eta <= 1.0) => {
                Err(invalid("eta", format!("must lie in (0, 1], got {eta}")))
            }
            Self::Custom { exponent } if !(exponent >= 0.0 && exponent.is_finite()) => Err(
                invalid("exponent", format!("must be finite and nonnegative, got {exponent}")),
            ),
            _ => Ok(()),
        }
    }
}

/// `θ = cap·√(K·t·log_arg)`, the envelope `Γ` is measured against.
pub fn violation_envelope(t: usize, actions: usize, cap_constant: f64, log_arg: f64) -> f64 {
    cap_constant * (actions as f64 * t as f64 * log_arg).sqrt()
}

/// `Γ = clip(V_{t−1} − θ, 0, θ)` with `θ = 21·√(K·t·log(1/δ2))`.
pub fn gamma_bonus(v_prev: f64, t: usize, actions: usize, delta2: f64) -> f64 {
    gamma_bonus_with(v_prev, t, actions, DEFAULT_GAMMA_CAP_CONSTANT, (1.0 / delta2).ln())
}

/// [`gamma_bonus`] with an explicit cap constant and log argument.
pub fn gamma_bonus_with(v_prev: f64, t: usize, actions: usize, cap_constant: f64, log_arg: f64) -> f64 {
    let theta = violation_envelope(t, actions, cap_constant, log_arg);
    (v_prev - theta).clamp(0.0, theta.max(0.0))
}

/// Learning rate for an action that has just been played for the
/// `n_after_play`-th time.
pub fn learning_rate(spec: &LearningRateSpec, n_after_play: u64, gamma: f64) -> f64 {
    if n_after_play <= 1 {
        return 1.0;
    }
    let n = n_after_play as f64;
    match *spec {
        LearningRateSpec::Adaptive => ((1.0 + gamma) / n).min(1.0),
        LearningRateSpec::EmpiricalMean => 1.0 / n,
        LearningRateSpec::Exponential { eta } => eta,
        LearningRateSpec::Custom { exponent } => n.powf(-exponent),
    }
}

/// Weights `w(τ) = η_τ ∏_{k>τ}(1 − η_k)` that the recursive update with
/// these rates assigns to each past observation.
pub fn weights_from_rates(rates: &[f64]) -> Result<Vec<f64>> {
    match rates.first() {
        Some(&r) if r == 1.0 => {}
        _ => return Err(invalid("rates", "the first rate must equal 1")),
    }
    if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(invalid("rates", format!("rates must lie in (0, 1], got {r}")));
    }
    let mut weights = vec![0.0; rates.len()];
    let mut tail = 1.0;
    for (w, &eta) in weights.iter_mut().zip(rates).rev() {
        *w = eta * tail;
        tail *= 1.0 - eta;
    }
    Ok(weights)
}

/// Optimistic bonus `min(2, √(2·log(2/δ2)/n))`, and 2 for an unplayed action.
pub fn bonus(n_before: u64, delta2: f64) -> f64 {
    if n_before == 0 {
        return MAX_BONUS;
    }
    (2.0 * (2.0 / delta2).ln() / n_before as f64)
        .sqrt()
        .min(MAX_BONUS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    /// `g_hat[i][a]`, zero for unplayed actions.
    pub g_hat: Vec<Vec<f64>>,
    /// Play counts per action.
    pub n: Vec<u64>,
    /// Running realized violation `V^{(i)}`.
    pub cum_violation: Vec<f64>,
    pub round: usize,
    pub delta2: f64,
    pub actions: usize,
    pub constraints: usize,
    pub horizon: usize,
    pub gamma_cap_constant: f64,
    /// Argument of the square root's logarithm in `Γ`, `log(1/δ2)` by default.
    pub log_arg_gamma: f64,
}

impl EstimatorState {
    pub fn new(params: &ExperimentParams, delta2: f64) -> Self {
        Self {
            g_hat: vec![vec![0.0; params.actions]; params.constraints],
            n: vec![0; params.actions],
            cum_violation: vec![0.0; params.constraints],
            round: 0,
            delta2,
            actions: params.actions,
            constraints: params.constraints,
            horizon: params.horizon,
            gamma_cap_constant: DEFAULT_GAMMA_CAP_CONSTANT,
            log_arg_gamma: (1.0 / delta2).ln(),
        }
    }

    pub fn with_gamma_constants(mut self, cap_constant: f64, log_arg: f64) -> Self {
        self.gamma_cap_constant = cap_constant;
        self.log_arg_gamma = log_arg;
        self
    }

    /// `Γ^{(i)}` for the upcoming round, computed from the current `V`.
    pub fn gammas(&self) -> Vec<f64> {
        let t = self.round + 1;
        self.cum_violation
            .iter()
            .map(|&v| gamma_bonus_with(v, t, self.actions, self.gamma_cap_constant, self.log_arg_gamma))
            .collect()
    }

    /// Current per-action bonuses.
    pub fn bonuses(&self) -> Vec<f64> {
        self.n.iter().map(|&n| bonus(n, self.delta2)).collect()
    }

    /// Records the costs observed at `played` and returns the `Γ` values used.
    pub fn update(
        &mut self,
        played: usize,
        observed_costs: &[f64],
        spec: &LearningRateSpec,
    ) -> Result<Vec<f64>> {
        if played >= self.actions {
            return Err(Error::OutOfRange {
                index: played,
                limit: self.actions,
            });
        }
        check_dim(self.constraints, observed_costs.len())?;
        let gammas = self.gammas();
        self.n[played] += 1;
        let n = self.n[played];
        for (i, &raw) in observed_costs.iter().enumerate() {
            let g = clamp_cost(raw);
            let eta = learning_rate(spec, n, gammas[i]);
            let est = &mut self.g_hat[i][played];
            *est += eta * (g - *est);
            self.cum_violation[i] += g;
        }
        self.round += 1;
        Ok(gammas)
    }

    pub fn feasible_set(&self) -> FeasibleSet {
        build_feasible_set(self, self.delta2)
    }
}

fn clamp_cost(raw: f64) -> f64 {
    if (-1.0..=1.0).contains(&raw) {
        return raw;
    }
    warn!("cost {raw} outside [-1, 1]; clamping");
    if raw.is_nan() {
        0.0
    } else {
        raw.clamp(-1.0, 1.0)
    }
}

/// Constraint vectors `ĝ^{(i)} − b` of the estimated feasible set.
pub fn build_feasible_set(state: &EstimatorState, delta2: f64) -> FeasibleSet {
    let b: Vec<f64> = state.n.iter().map(|&n| bonus(n, delta2)).collect();
    let vectors = state
        .g_hat
        .iter()
        .map(|row| row.iter().zip(&b).map(|(g, b)| g - b).collect())
        .collect();
    FeasibleSet::from_raw(vectors)
}
