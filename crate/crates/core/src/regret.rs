//! EXP-IX with projections onto moving feasible sets.
//!
//! Each round the previous strategy is tilted multiplicatively by the
//! implicit-exploration reward estimate and then KL-projected onto the
//! current estimated feasible set.

use log::warn;

use crate::error::{Error, Result};
use crate::projection::{kl_project_set, ProjectionConfig, ProjectionReport};
use crate::types::{ExperimentParams, FeasibleSet, Strategy};

#[derive(Debug, Clone, PartialEq)]
pub struct RegretMinimizer {
    /// Step size `β = √(log(K/δ1)/(K·T))`.
    pub beta: f64,
    /// Implicit-exploration parameter, always `β/2`.
    pub gamma: f64,
    /// Last played strategy.
    pub x_prev: Strategy,
    /// Last reward estimate `f̂`.
    pub fhat_prev: Vec<f64>,
    pub round: usize,
}

impl RegretMinimizer {
    /// Starts from the uniform strategy with an all-ones reward estimate so
    /// the first tilt is the identity.
    pub fn new(params: &ExperimentParams, delta1: f64) -> Self {
        let k = params.actions as f64;
        let beta = ((k / delta1).ln() / (k * params.horizon as f64)).sqrt();
        Self {
            beta,
            gamma: beta / 2.0,
            x_prev: Strategy::uniform(params.actions),
            fhat_prev: vec![1.0; params.actions],
            round: 0,
        }
    }

    pub fn actions(&self) -> usize {
        self.x_prev.len()
    }

    /// Unnormalized tilt `x_{t−1}(a) · exp(β (f̂_{t−1}(a) − 1))`.
    pub fn tilted(&self) -> Vec<f64> {
        self.x_prev
            .probs()
            .iter()
            .zip(&self.fhat_prev)
            .map(|(x, f)| x * (self.beta * (f - 1.0)).exp())
            .collect()
    }

    /// Computes this round's strategy and stores it as the previous play.
    pub fn recommend(
        &mut self,
        set: &FeasibleSet,
        cfg: &ProjectionConfig,
    ) -> Result<(Strategy, ProjectionReport)> {
        let mut tilted = self.tilted();
        // The previous play may carry exact zeros (vertex fallback); the
        // projection needs a strictly positive input.
        for v in tilted.iter_mut() {
            *v = v.max(cfg.prob_floor * 1e-3);
        }
        let report = kl_project_set(&tilted, set, cfg)?;
        self.x_prev = report.result.clone();
        Ok((report.result.clone(), report))
    }

    /// Replaces the stored play, used when the orchestrator overrides the
    /// recommendation.
    pub fn set_played(&mut self, strategy: Strategy) {
        self.x_prev = strategy;
    }

    /// IX estimate: `f̂(a) = 1` off the played action and
    /// `1 − (1 − f)/(x(a_t) + γ)` on it.
    pub fn update(&mut self, played: usize, reward: f64) -> Result<()> {
        let k = self.actions();
        if played >= k {
            return Err(Error::OutOfRange {
                index: played,
                limit: k,
            });
        }
        let reward = if (0.0..=1.0).contains(&reward) {
            reward
        } else {
            warn!("reward {reward} outside [0, 1]; clamping");
            if reward.is_nan() {
                0.0
            } else {
                reward.clamp(0.0, 1.0)
            }
        };
        self.fhat_prev.iter_mut().for_each(|f| *f = 1.0);
        self.fhat_prev[played] = 1.0 - (1.0 - reward) / (self.x_prev.prob(played) + self.gamma);
        self.round += 1;
        Ok(())
    }
}
