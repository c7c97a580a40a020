//! Reward and cost generators for the stochastic and adversarial regimes.
//!
//! The learner sees an environment only through [`BanditFeedback`], which
//! answers point queries at the played action. Benchmarks and metrics use
//! [`FullInformation`] to read complete round vectors.
//!
//! Stochastic noise is drawn from a keyed counter-based generator: the value
//! at `(seed, stream, t, i, a)` is a fixed hash of those coordinates, so a
//! query never depends on which other cells were read before it.

use serde::{Deserialize, Serialize};

use crate::benchmarks::{lp_solve, LpProblem, LpStatus, LP_TOL};
use crate::error::{check_dim, invalid, Error, Result};
use crate::types::{CostSample, RewardSample};

/// Answers reward and cost queries at a single `(round, action)` cell.
pub trait BanditFeedback {
    fn actions(&self) -> usize;
    fn constraints(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Reward and the `m` costs of action `a` at round `t` (1-based).
    fn point_query(&self, t: usize, a: usize) -> Result<(f64, Vec<f64>)>;
}

/// Complete round vectors, reserved for benchmark and metric computation.
pub trait FullInformation: BanditFeedback {
    fn full_vectors(&self, t: usize) -> Result<(RewardSample, CostSample)>;
    /// Expected cost matrix `ḡ`, defined only for stochastic environments.
    fn cost_means(&self) -> Option<&[Vec<f64>]>;
    /// Strictly safe action, defined only for adversarial environments.
    fn safe_action(&self) -> Option<usize>;
}

/// The SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const REWARD_STREAM: u64 = 0x5245_5741_5244;
const COST_STREAM: u64 = 0x434f_5354;

/// Uniform draw in `[0, 1)` addressed by `(seed, stream, t, i, a)`.
pub fn keyed_uniform(seed: u64, stream: u64, t: u64, i: u64, a: u64) -> f64 {
    let mut h = splitmix64(seed ^ stream);
    h = splitmix64(h ^ t);
    h = splitmix64(h ^ i);
    h = splitmix64(h ^ a);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Either a fixed number of rounds or `⌈√T⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Period {
    Rounds(usize),
    Scaled(PeriodScale),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodScale {
    Sqrt,
}

impl Period {
    pub fn resolve(&self, horizon: usize) -> usize {
        match *self {
            Period::Rounds(p) => p,
            Period::Scaled(PeriodScale::Sqrt) => (horizon as f64).sqrt().ceil().max(1.0) as usize,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Period::Rounds(0) => Err(invalid("period", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

impl Default for Period {
    fn default() -> Self {
        Period::Rounds(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RewardSequence {
    /// Cycles through `vectors`, holding each one for `period` rounds.
    FixedVectors {
        vectors: Vec<Vec<f64>>,
        #[serde(default)]
        period: Period,
    },
    /// Independent `{0, 1}` rewards with the given means.
    IidBernoulli { means: Vec<f64> },
}

impl RewardSequence {
    fn actions(&self) -> usize {
        match self {
            RewardSequence::FixedVectors { vectors, .. } => vectors.first().map_or(0, Vec::len),
            RewardSequence::IidBernoulli { means } => means.len(),
        }
    }

    fn validate(&self, actions: usize) -> Result<()> {
        let rows: Vec<&Vec<f64>> = match self {
            RewardSequence::FixedVectors { vectors, period } => {
                period.validate()?;
                if vectors.is_empty() {
                    return Err(invalid("rewards", "need at least one reward vector"));
                }
                vectors.iter().collect()
            }
            RewardSequence::IidBernoulli { means } => vec![means],
        };
        for row in rows {
            check_dim(actions, row.len())?;
            if let Some(r) = row.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(invalid("rewards", format!("reward {r} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn reward(&self, seed: u64, horizon: usize, t: usize, a: usize) -> f64 {
        match self {
            RewardSequence::FixedVectors { vectors, period } => {
                let p = period.resolve(horizon);
                vectors[((t - 1) / p) % vectors.len()][a]
            }
            RewardSequence::IidBernoulli { means } => {
                let u = keyed_uniform(seed, REWARD_STREAM, t as u64, 0, a as u64);
                if u < means[a] {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostNoise {
    /// `+1` with probability `(1 + ḡ)/2`, otherwise `−1`.
    BernoulliPm1,
    /// `ḡ + U(−width, width)`; requires `|ḡ| + width ≤ 1` so the mean is exact.
    UniformWidth { width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticEnvSpec {
    pub rewards: RewardSequence,
    /// `m × K` matrix of expected costs `ḡ`.
    pub cost_means: Vec<Vec<f64>>,
    pub cost_noise: CostNoise,
}

impl StochasticEnvSpec {
    pub fn actions(&self) -> usize {
        self.rewards.actions()
    }

    pub fn constraints(&self) -> usize {
        self.cost_means.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.actions();
        if k == 0 {
            return Err(invalid("rewards", "need at least one action"));
        }
        if self.cost_means.is_empty() {
            return Err(invalid("cost_means", "need at least one constraint"));
        }
        self.rewards.validate(k)?;
        let width = match self.cost_noise {
            CostNoise::BernoulliPm1 => 0.0,
            CostNoise::UniformWidth { width } => {
                if !(width >= 0.0 && width <= 1.0) {
                    return Err(invalid("width", format!("must lie in [0, 1], got {width}")));
                }
                width
            }
        };
        for row in &self.cost_means {
            check_dim(k, row.len())?;
            if let Some(g) = row.iter().find(|g| !(g.abs() + width <= 1.0)) {
                return Err(invalid(
                    "cost_means",
                    format!("mean {g} with noise width {width} leaves [-1, 1]"),
                ));
            }
        }
        let mut lp = LpProblem::new(vec![0.0; k]).on_simplex();
        for row in &self.cost_means {
            lp = lp.leq(row.clone(), 0.0);
        }
        if lp_solve(&lp, LP_TOL)?.status != LpStatus::Optimal {
            return Err(invalid(
                "cost_means",
                "no strategy satisfies every constraint in expectation",
            ));
        }
        Ok(())
    }

    pub fn build(&self, horizon: usize, seed: u64) -> Result<StochasticEnv> {
        self.validate()?;
        Ok(StochasticEnv {
            spec: self.clone(),
            horizon,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticEnv {
    pub spec: StochasticEnvSpec,
    horizon: usize,
    seed: u64,
}

impl StochasticEnv {
    fn cost(&self, t: usize, i: usize, a: usize) -> f64 {
        let g = self.spec.cost_means[i][a];
        let u = keyed_uniform(self.seed, COST_STREAM, t as u64, i as u64, a as u64);
        let c = match self.spec.cost_noise {
            CostNoise::BernoulliPm1 => {
                if u < (1.0 + g) / 2.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            CostNoise::UniformWidth { width } => g + width * (2.0 * u - 1.0),
        };
        c.clamp(-1.0, 1.0)
    }
}

fn check_cell(t: usize, a: usize, horizon: usize, actions: usize) -> Result<()> {
    if t == 0 || t > horizon {
        return Err(Error::OutOfRange {
            index: t,
            limit: horizon,
        });
    }
    if a >= actions {
        return Err(Error::OutOfRange {
            index: a,
            limit: actions,
        });
    }
    Ok(())
}

impl BanditFeedback for StochasticEnv {
    fn actions(&self) -> usize {
        self.spec.actions()
    }

    fn constraints(&self) -> usize {
        self.spec.constraints()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn point_query(&self, t: usize, a: usize) -> Result<(f64, Vec<f64>)> {
        check_cell(t, a, self.horizon, self.actions())?;
        let reward = self.spec.rewards.reward(self.seed, self.horizon, t, a);
        let costs = (0..self.constraints()).map(|i| self.cost(t, i, a)).collect();
        Ok((reward, costs))
    }
}

impl FullInformation for StochasticEnv {
    fn full_vectors(&self, t: usize) -> Result<(RewardSample, CostSample)> {
        full_vectors_by_points(self, t)
    }

    fn cost_means(&self) -> Option<&[Vec<f64>]> {
        Some(&self.spec.cost_means)
    }

    fn safe_action(&self) -> Option<usize> {
        None
    }
}

fn full_vectors_by_points<E: BanditFeedback + ?Sized>(
    env: &E,
    t: usize,
) -> Result<(RewardSample, CostSample)> {
    let k = env.actions();
    let mut rewards = Vec::with_capacity(k);
    let mut costs = vec![Vec::with_capacity(k); env.constraints()];
    for a in 0..k {
        let (r, c) = env.point_query(t, a)?;
        rewards.push(r);
        for (row, v) in costs.iter_mut().zip(c) {
            row.push(v);
        }
    }
    Ok((RewardSample::new(rewards)?, CostSample::new(costs)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarialMode {
    /// Non-safe costs equal `cost_bank` and flip sign every `period` rounds.
    PhaseSwitch { period: Period, cost_bank: Vec<Vec<f64>> },
    /// Non-safe costs `amplitude · sin(2π·frequency·t + φ_{i,a})` with phases
    /// spread evenly over the `(i, a)` cells.
    Drift { amplitude: f64, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialEnvSpec {
    pub mode: AdversarialMode,
    pub safe_action: usize,
    /// Every cost of the safe action is `−rho`.
    pub rho: f64,
    pub rewards: RewardSequence,
    /// Constraint count; only consulted in drift mode.
    #[serde(default = "one")]
    pub constraints: usize,
}

fn one() -> usize {
    1
}

impl AdversarialEnvSpec {
    pub fn actions(&self) -> usize {
        self.rewards.actions()
    }

    pub fn constraints(&self) -> usize {
        match &self.mode {
            AdversarialMode::PhaseSwitch { cost_bank, .. } => cost_bank.len(),
            AdversarialMode::Drift { .. } => self.constraints,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.actions();
        if k == 0 {
            return Err(invalid("rewards", "need at least one action"));
        }
        if !matches!(self.rewards, RewardSequence::FixedVectors { .. }) {
            return Err(invalid(
                "rewards",
                "adversarial rewards must be fixed vectors, not random draws",
            ));
        }
        self.rewards.validate(k)?;
        if self.safe_action >= k {
            return Err(Error::OutOfRange {
                index: self.safe_action,
                limit: k,
            });
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(invalid("rho", format!("must lie in [0, 1], got {}", self.rho)));
        }
        if self.constraints() == 0 {
            return Err(invalid("constraints", "need at least one constraint"));
        }
        match &self.mode {
            AdversarialMode::PhaseSwitch { period, cost_bank } => {
                period.validate()?;
                for row in cost_bank {
                    check_dim(k, row.len())?;
                    if let Some(c) = row.iter().find(|c| !(-1.0..=1.0).contains(*c)) {
                        return Err(invalid("cost_bank", format!("cost {c} outside [-1, 1]")));
                    }
                }
            }
            AdversarialMode::Drift {
                amplitude,
                frequency,
            } => {
                if !(0.0..=1.0).contains(amplitude) {
                    return Err(invalid("amplitude", "must lie in [0, 1]"));
                }
                if !frequency.is_finite() {
                    return Err(invalid("frequency", "must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, horizon: usize) -> Result<AdversarialEnv> {
        self.validate()?;
        let period = match &self.mode {
            AdversarialMode::PhaseSwitch { period, .. } => period.resolve(horizon),
            AdversarialMode::Drift { .. } => 1,
        };
        Ok(AdversarialEnv {
            spec: self.clone(),
            horizon,
            period,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialEnv {
    pub spec: AdversarialEnvSpec,
    horizon: usize,
    period: usize,
}

impl AdversarialEnv {
    fn cost(&self, t: usize, i: usize, a: usize) -> f64 {
        if a == self.spec.safe_action {
            return -self.spec.rho;
        }
        match &self.spec.mode {
            AdversarialMode::PhaseSwitch { cost_bank, .. } => {
                let sign = if ((t - 1) / self.period) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                sign * cost_bank[i][a]
            }
            AdversarialMode::Drift {
                amplitude,
                frequency,
            } => {
                let cells = (self.constraints() * self.actions()) as f64;
                let phase = std::f64::consts::TAU * (i * self.actions() + a) as f64 / cells;
                (amplitude * (std::f64::consts::TAU * frequency * t as f64 + phase).sin())
                    .clamp(-1.0, 1.0)
            }
        }
    }

    /// Slater parameter of the realized sequence over the whole horizon.
    pub fn realized_rho(&self) -> Result<f64> {
        realized_rho(self, self.horizon)
    }
}

impl BanditFeedback for AdversarialEnv {
    fn actions(&self) -> usize {
        self.spec.actions()
    }

    fn constraints(&self) -> usize {
        self.spec.constraints()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn point_query(&self, t: usize, a: usize) -> Result<(f64, Vec<f64>)> {
        check_cell(t, a, self.horizon, self.actions())?;
        let reward = self.spec.rewards.reward(0, self.horizon, t, a);
        let costs = (0..self.constraints()).map(|i| self.cost(t, i, a)).collect();
        Ok((reward, costs))
    }
}

impl FullInformation for AdversarialEnv {
    fn full_vectors(&self, t: usize) -> Result<(RewardSample, CostSample)> {
        full_vectors_by_points(self, t)
    }

    fn cost_means(&self) -> Option<&[Vec<f64>]> {
        None
    }

    fn safe_action(&self) -> Option<usize> {
        Some(self.spec.safe_action)
    }
}

/// `ρ = −min_a max_{t,i} g_t^{(i)}(a)` over a realized `T × m × K` tensor.
pub fn compute_rho(costs: &[CostSample]) -> f64 {
    let Some(first) = costs.first() else {
        return 0.0;
    };
    let k = first.costs.first().map_or(0, Vec::len);
    let mut worst = vec![f64::NEG_INFINITY; k];
    for sample in costs {
        for row in &sample.costs {
            for (w, &c) in worst.iter_mut().zip(row) {
                *w = w.max(c);
            }
        }
    }
    -worst.into_iter().fold(f64::INFINITY, f64::min)
}

/// [`compute_rho`] over the first `rounds` rounds of an environment.
pub fn realized_rho<E: FullInformation + ?Sized>(env: &E, rounds: usize) -> Result<f64> {
    let k = env.actions();
    let mut worst = vec![f64::NEG_INFINITY; k];
    for t in 1..=rounds {
        let (_, costs) = env.full_vectors(t)?;
        for row in &costs.costs {
            for (w, &c) in worst.iter_mut().zip(row) {
                *w = w.max(c);
            }
        }
    }
    Ok(-worst.into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum EnvSpec {
    Stochastic(StochasticEnvSpec),
    Adversarial(AdversarialEnvSpec),
}

impl EnvSpec {
    pub fn actions(&self) -> usize {
        match self {
            EnvSpec::Stochastic(s) => s.actions(),
            EnvSpec::Adversarial(s) => s.actions(),
        }
    }

    pub fn constraints(&self) -> usize {
        match self {
            EnvSpec::Stochastic(s) => s.constraints(),
            EnvSpec::Adversarial(s) => s.constraints(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvSpec::Stochastic(s) => s.validate(),
            EnvSpec::Adversarial(s) => s.validate(),
        }
    }

    pub fn build(&self, horizon: usize, seed: u64) -> Result<Environment> {
        Ok(match self {
            EnvSpec::Stochastic(s) => Environment::Stochastic(s.build(horizon, seed)?),
            EnvSpec::Adversarial(s) => Environment::Adversarial(s.build(horizon)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Stochastic(StochasticEnv),
    Adversarial(AdversarialEnv),
}

macro_rules! delegate {
    ($self:ident, $env:ident => $body:expr) => {
        match $self {
            Environment::Stochastic($env) => $body,
            Environment::Adversarial($env) => $body,
        }
    };
}

impl BanditFeedback for Environment {
    fn actions(&self) -> usize {
        delegate!(self, e => e.actions())
    }

    fn constraints(&self) -> usize {
        delegate!(self, e => e.constraints())
    }

    fn horizon(&self) -> usize {
        delegate!(self, e => e.horizon())
    }

    fn point_query(&self, t: usize, a: usize) -> Result<(f64, Vec<f64>)> {
        delegate!(self, e => e.point_query(t, a))
    }
}

impl FullInformation for Environment {
    fn full_vectors(&self, t: usize) -> Result<(RewardSample, CostSample)> {
        delegate!(self, e => e.full_vectors(t))
    }

    fn cost_means(&self) -> Option<&[Vec<f64>]> {
        delegate!(self, e => e.cost_means())
    }

    fn safe_action(&self) -> Option<usize> {
        delegate!(self, e => e.safe_action())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stochastic(cost_means: Vec<Vec<f64>>, noise: CostNoise) -> StochasticEnvSpec {
        let k = cost_means[0].len();
        StochasticEnvSpec {
            rewards: RewardSequence::IidBernoulli {
                means: vec![0.5; k],
            },
            cost_means,
            cost_noise: noise,
        }
    }

    fn phase_switch(period: Period) -> AdversarialEnvSpec {
        AdversarialEnvSpec {
            mode: AdversarialMode::PhaseSwitch {
                period,
                cost_bank: vec![vec![0.0, 0.8, -0.4], vec![0.0, 0.3, 0.9]],
            },
            safe_action: 0,
            rho: 0.5,
            rewards: RewardSequence::FixedVectors {
                vectors: vec![vec![0.1, 0.9, 0.5]],
                period: Period::Rounds(1),
            },
            constraints: 2,
        }
    }

    #[test]
    fn degenerate_bernoulli_is_constant() {
        let env = stochastic(vec![vec![1.0, -1.0]], CostNoise::BernoulliPm1)
            .build(50, 3)
            .unwrap();
        for t in 1..=50 {
            assert_eq!(env.point_query(t, 0).unwrap().1, vec![1.0]);
            assert_eq!(env.point_query(t, 1).unwrap().1, vec![-1.0]);
        }
    }

    #[test]
    fn monte_carlo_mean() {
        let n = 100_000;
        let env = stochastic(vec![vec![0.3, -0.6]], CostNoise::BernoulliPm1)
            .build(n, 11)
            .unwrap();
        let mean: f64 = (1..=n).map(|t| env.point_query(t, 0).unwrap().1[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 3.0 * (1.0 / n as f64).sqrt() * 2.0, "{mean}");

        let env = stochastic(vec![vec![0.3, -0.6]], CostNoise::UniformWidth { width: 0.4 })
            .build(n, 11)
            .unwrap();
        let mean: f64 = (1..=n).map(|t| env.point_query(t, 1).unwrap().1[0]).sum::<f64>() / n as f64;
        assert!((mean + 0.6).abs() < 0.01, "{mean}");
    }

    #[test]
    fn uniform_draws_pass_chi_square() {
        // 20 equiprobable bins, 19 degrees of freedom; 36.19 is the 99% quantile.
        let bins = 20;
        let n = 100_000u64;
        let mut counts = vec![0u64; bins];
        for t in 0..n {
            let u = keyed_uniform(42, COST_STREAM, t, t % 3, t % 7);
            counts[(u * bins as f64) as usize] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 36.19, "{chi2}");
    }

    #[test]
    fn query_order_independence() {
        let env = stochastic(
            vec![vec![0.1, 0.2, -0.5], vec![0.0, -0.3, -0.2]],
            CostNoise::BernoulliPm1,
        )
        .build(100, 9)
        .unwrap();
        let forward: Vec<_> = (1..=100)
            .flat_map(|t| (0..3).map(move |a| (t, a)))
            .map(|(t, a)| env.point_query(t, a).unwrap())
            .collect();
        let fresh = env.clone();
        let backward: Vec<_> = (1..=100)
            .rev()
            .flat_map(|t| (0..3).rev().map(move |a| (t, a)))
            .map(|(t, a)| fresh.point_query(t, a).unwrap())
            .collect();
        let mut backward = backward;
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn full_vectors_match_point_queries() {
        let env = stochastic(vec![vec![0.1, 0.2, -0.5]], CostNoise::BernoulliPm1)
            .build(30, 5)
            .unwrap();
        for (t, a) in [(1, 0), (17, 2), (30, 1)] {
            let (r, c) = env.full_vectors(t).unwrap();
            let (pr, pc) = env.point_query(t, a).unwrap();
            assert_eq!(r.rewards[a], pr);
            assert_eq!(c.column(a), pc);
        }
    }

    #[test]
    fn stochastic_validation() {
        assert!(stochastic(vec![vec![0.5, 0.2]], CostNoise::BernoulliPm1)
            .validate()
            .is_err());
        assert!(stochastic(vec![vec![1.5, -0.2]], CostNoise::BernoulliPm1)
            .validate()
            .is_err());
        assert!(stochastic(vec![vec![0.8, -0.2]], CostNoise::UniformWidth { width: 0.3 })
            .validate()
            .is_err());
        let env = stochastic(vec![vec![0.5, -0.2]], CostNoise::BernoulliPm1)
            .build(5, 0)
            .unwrap();
        assert!(env.point_query(0, 0).is_err());
        assert!(env.point_query(6, 0).is_err());
        assert!(env.point_query(1, 2).is_err());
    }

    #[test]
    fn safe_action_guarantee_and_phases() {
        let env = phase_switch(Period::Rounds(3)).build(20).unwrap();
        for t in 1..=20 {
            for c in env.point_query(t, 0).unwrap().1 {
                assert!(c <= -0.5);
            }
        }
        assert_eq!(env.point_query(1, 1).unwrap().1, vec![0.8, 0.3]);
        assert_eq!(env.point_query(3, 1).unwrap().1, vec![0.8, 0.3]);
        assert_eq!(env.point_query(4, 1).unwrap().1, vec![-0.8, -0.3]);
        assert_eq!(env.point_query(7, 2).unwrap().1, vec![-0.4, 0.9]);
        assert_eq!(env.realized_rho().unwrap(), 0.5);
    }

    #[test]
    fn sqrt_period() {
        assert_eq!(Period::Scaled(PeriodScale::Sqrt).resolve(1000), 32);
        assert_eq!(Period::Scaled(PeriodScale::Sqrt).resolve(64_000), 253);
        assert_eq!(Period::Scaled(PeriodScale::Sqrt).resolve(16), 4);
        let env = phase_switch(Period::Scaled(PeriodScale::Sqrt)).build(16).unwrap();
        assert_eq!(env.point_query(4, 1).unwrap().1[0], 0.8);
        assert_eq!(env.point_query(5, 1).unwrap().1[0], -0.8);
    }

    #[test]
    fn drift_mode_stays_in_range() {
        let spec = AdversarialEnvSpec {
            mode: AdversarialMode::Drift {
                amplitude: 0.9,
                frequency: 0.013,
            },
            safe_action: 1,
            rho: 0.2,
            rewards: RewardSequence::FixedVectors {
                vectors: vec![vec![0.5, 0.5, 0.5]],
                period: Period::Rounds(1),
            },
            constraints: 3,
        };
        let env = spec.build(500).unwrap();
        for t in 1..=500 {
            let (_, c) = env.full_vectors(t).unwrap();
            assert_eq!(c.costs.len(), 3);
            assert!(c.column(1).iter().all(|&v| v == -0.2));
        }
        assert!((env.realized_rho().unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn adversarial_validation() {
        let mut spec = phase_switch(Period::Rounds(2));
        spec.rewards = RewardSequence::IidBernoulli {
            means: vec![0.5; 3],
        };
        assert!(spec.validate().is_err());
        let mut spec = phase_switch(Period::Rounds(0));
        assert!(spec.validate().is_err());
        spec = phase_switch(Period::Rounds(1));
        spec.safe_action = 3;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rho_examples() {
        let flat: Vec<CostSample> = (0..4)
            .map(|_| CostSample::new(vec![vec![-0.3; 3]; 2]).unwrap())
            .collect();
        assert!((compute_rho(&flat) - 0.3).abs() < 1e-15);

        let mut seq = Vec::new();
        for t in 0..5 {
            let hit = if t == 2 { 1.0 } else { -0.9 };
            seq.push(CostSample::new(vec![vec![-0.5, hit, hit]]).unwrap());
        }
        assert_eq!(compute_rho(&seq), 0.5);

        let mut state = 7u64;
        let mut next = || {
            state = splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let tensor: Vec<CostSample> = (0..5)
            .map(|_| CostSample::new((0..2).map(|_| (0..3).map(|_| next()).collect()).collect()).unwrap())
            .collect();
        let mut best = f64::INFINITY;
        for a in 0..3 {
            let mut worst = f64::NEG_INFINITY;
            for s in &tensor {
                for i in 0..2 {
                    worst = worst.max(s.costs[i][a]);
                }
            }
            best = best.min(worst);
        }
        assert_eq!(compute_rho(&tensor), -best);
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }
}
