//! Post-hoc metrics of a run: regret against prefix benchmarks, realized and
//! positive violations, bonus budget, and set-inclusion diagnostics.

use serde::{Deserialize, Serialize};

use crate::algorithm::RoundRecord;
use crate::benchmarks::{opt_adversarial, opt_stochastic};
use crate::env::{realized_rho, FullInformation};
use crate::error::{check_dim, invalid, Error, Result};
use crate::types::{dot, Strategy};

/// Membership tolerance for inclusion diagnostics.
pub const INCLUSION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    /// Best fixed strategy satisfying the expected constraints.
    Stochastic,
    /// `α` times the best unconstrained strategy, `α = ρ/(1+ρ)`.
    Adversarial,
}

/// Rounds at which the benchmark is re-solved: every `⌈T/100⌉` and `T`.
pub fn checkpoints(rounds: usize) -> Vec<usize> {
    if rounds == 0 {
        return Vec::new();
    }
    let step = rounds.div_ceil(100);
    let mut out: Vec<usize> = (1..).map(|k| k * step).take_while(|&t| t < rounds).collect();
    out.push(rounds);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSeries {
    pub kind: BenchmarkKind,
    pub checkpoints: Vec<usize>,
    /// Benchmark over the rounds `1..=t` of each checkpoint.
    pub benchmark: Vec<f64>,
    pub cumulative_reward: Vec<f64>,
    pub regret: Vec<f64>,
    /// Slater parameter of the realized costs (adversarial only).
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
}

impl RegretSeries {
    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }

    /// Linear interpolation between checkpoints, with `R_0 = 0`.
    pub fn interpolate(&self, t: usize) -> f64 {
        let mut prev = (0usize, 0.0);
        for (&c, &r) in self.checkpoints.iter().zip(&self.regret) {
            if t <= c {
                let span = (c - prev.0) as f64;
                return prev.1 + (r - prev.1) * (t - prev.0) as f64 / span;
            }
            prev = (c, r);
        }
        prev.1
    }
}

pub fn compute_regret<E: FullInformation + ?Sized>(
    trace: &[RoundRecord],
    env: &E,
    kind: BenchmarkKind,
) -> Result<RegretSeries> {
    let k = env.actions();
    let means = match kind {
        BenchmarkKind::Stochastic => Some(env.cost_means().ok_or_else(|| {
            invalid("benchmark", "stochastic benchmark needs an environment with cost means")
        })?),
        BenchmarkKind::Adversarial => None,
    };
    let (rho, alpha) = match kind {
        BenchmarkKind::Stochastic => (None, None),
        BenchmarkKind::Adversarial => {
            let rho = realized_rho(env, trace.len())?;
            let r = rho.max(0.0);
            (Some(rho), Some(r / (1.0 + r)))
        }
    };

    let marks = checkpoints(trace.len());
    let mut sums = vec![0.0; k];
    let mut earned = 0.0;
    let mut next = marks.iter().peekable();
    let mut out = RegretSeries {
        kind,
        checkpoints: marks.clone(),
        benchmark: Vec::with_capacity(marks.len()),
        cumulative_reward: Vec::with_capacity(marks.len()),
        regret: Vec::with_capacity(marks.len()),
        rho,
        alpha,
    };
    for rec in trace {
        let (rewards, _) = env.full_vectors(rec.t)?;
        for (s, r) in sums.iter_mut().zip(&rewards.rewards) {
            *s += r;
        }
        earned += rec.reward;
        if next.peek() == Some(&&rec.t) {
            next.next();
            let bench = match means {
                Some(g) => opt_stochastic(&sums, g)?.0,
                None => alpha.unwrap_or(0.0) * opt_adversarial(&sums).0,
            };
            out.benchmark.push(bench);
            out.cumulative_reward.push(earned);
            out.regret.push(bench - earned);
        }
    }
    Ok(out)
}

/// `Σ_{t=t1}^{t2} g_t^{(i)}(a_t)` with 1-based inclusive bounds.
pub fn interval_violation(trace: &[RoundRecord], i: usize, t1: usize, t2: usize) -> Result<f64> {
    if t1 == 0 || t1 > t2 || t2 > trace.len() {
        return Err(invalid(
            "interval",
            format!("need 1 ≤ t1 ≤ t2 ≤ {}, got [{t1}, {t2}]", trace.len()),
        ));
    }
    let m = trace[0].costs.len();
    if i >= m {
        return Err(Error::OutOfRange { index: i, limit: m });
    }
    Ok(trace[t1 - 1..t2].iter().map(|r| r.costs[i]).sum())
}

/// Per-constraint cumulative violation series, indexed `[i][t−1]`.
pub fn violation_series(trace: &[RoundRecord]) -> Vec<Vec<f64>> {
    let m = trace.first().map_or(0, |r| r.costs.len());
    let mut out = vec![Vec::with_capacity(trace.len()); m];
    let mut acc = vec![0.0; m];
    for rec in trace {
        for ((series, a), c) in out.iter_mut().zip(acc.iter_mut()).zip(&rec.costs) {
            *a += c;
            series.push(*a);
        }
    }
    out
}

/// `V_t = max_i V_t^{(i)}` at every round.
pub fn max_violation_series(trace: &[RoundRecord]) -> Vec<f64> {
    let per = violation_series(trace);
    (0..trace.len())
        .map(|t| per.iter().map(|s| s[t]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// `V⁺_t = max_i Σ_{τ≤t} [⟨x_τ, ḡ^{(i)}⟩]⁺` from the played strategies.
pub fn positive_violation(trace: &[RoundRecord], means: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; means.len()];
    let mut out = Vec::with_capacity(trace.len());
    for rec in trace {
        let x = rec.strategy.probs();
        for (a, g) in acc.iter_mut().zip(means) {
            check_dim(x.len(), g.len())?;
            *a += dot(x, g).max(0.0);
        }
        out.push(acc.iter().copied().fold(0.0, f64::max));
    }
    Ok(out)
}

/// [`positive_violation`] with the means read from the environment; an
/// error for environments without expected costs.
pub fn positive_violation_in<E: FullInformation + ?Sized>(
    trace: &[RoundRecord],
    env: &E,
) -> Result<Vec<f64>> {
    let means = env
        .cost_means()
        .ok_or_else(|| invalid("positive_violation", "environment has no expected costs"))?;
    positive_violation(trace, means)
}

/// Cumulative `Σ_{τ≤t} ⟨x_τ, b_τ⟩`.
pub fn bonus_budget(trace: &[RoundRecord]) -> Vec<f64> {
    let mut acc = 0.0;
    trace
        .iter()
        .map(|rec| {
            acc += dot(rec.strategy.probs(), &rec.bonus);
            acc
        })
        .collect()
}

/// Whether `x_ref` lies in each round's estimated set.
pub fn inclusion_flags(trace: &[RoundRecord], x_ref: &Strategy) -> Result<Vec<bool>> {
    trace
        .iter()
        .map(|rec| rec.feasible_set.membership(x_ref, INCLUSION_TOL))
        .collect()
}

/// Fraction of rounds whose estimated set contains `x_ref`.
pub fn inclusion_diagnostics(trace: &[RoundRecord], x_ref: &Strategy) -> Result<f64> {
    if trace.is_empty() {
        return Ok(1.0);
    }
    let flags = inclusion_flags(trace, x_ref)?;
    Ok(flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub cumulative_reward: Vec<f64>,
    pub violations: Vec<Vec<f64>>,
    pub max_violation: Vec<f64>,
    /// Defined only when the environment exposes cost means.
    pub positive_violation: Option<Vec<f64>>,
    pub bonus_budget: Vec<f64>,
    pub regret: RegretSeries,
}

impl MetricSeries {
    pub fn compute<E: FullInformation + ?Sized>(
        trace: &[RoundRecord],
        env: &E,
        kind: BenchmarkKind,
    ) -> Result<Self> {
        let mut acc = 0.0;
        let cumulative_reward = trace
            .iter()
            .map(|r| {
                acc += r.reward;
                acc
            })
            .collect();
        let positive_violation = match env.cost_means() {
            Some(g) => Some(positive_violation(trace, g)?),
            None => None,
        };
        Ok(Self {
            cumulative_reward,
            violations: violation_series(trace),
            max_violation: max_violation_series(trace),
            positive_violation,
            bonus_budget: bonus_budget(trace),
            regret: compute_regret(trace, env, kind)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::{run_episode, RunConfig};
    use crate::env::{CostNoise, RewardSequence, StochasticEnvSpec};
    use crate::types::{ExperimentParams, FeasibleSet};

    fn record(t: usize, x: Vec<f64>, costs: Vec<f64>, bonus: Vec<f64>) -> RoundRecord {
        let k = x.len();
        RoundRecord {
            t,
            strategy: Strategy::new(x).unwrap(),
            action: 0,
            reward: 0.5,
            violations_cum: vec![0.0; costs.len()],
            costs: costs.clone(),
            feasibility_fallback: false,
            projection_cycles: 1,
            projection_converged: true,
            gamma_values: vec![0.0; costs.len()],
            bonus,
            feasible_set: FeasibleSet::new(vec![vec![-2.0; k]; costs.len()]).unwrap(),
        }
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(1), vec![1]);
        assert_eq!(checkpoints(250).len(), 84);
        assert_eq!(checkpoints(250)[..3], [3, 6, 9]);
        assert_eq!(*checkpoints(250).last().unwrap(), 250);
        assert_eq!(checkpoints(1000).len(), 100);
        assert_eq!(checkpoints(50), (1..=50).collect::<Vec<_>>());
    }

    #[test]
    fn single_arm_regret_is_zero() {
        let spec = StochasticEnvSpec {
            rewards: RewardSequence::IidBernoulli { means: vec![0.6] },
            cost_means: vec![vec![-0.5]],
            cost_noise: CostNoise::BernoulliPm1,
        };
        let env = spec.build(120, 2).unwrap();
        let params = ExperimentParams::new(120, 1, 1, 0.1, 2).unwrap();
        let trace = run_episode(&params, &env, &RunConfig::default()).unwrap();
        let r = compute_regret(&trace, &env, BenchmarkKind::Stochastic).unwrap();
        assert!(r.regret.iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn stochastic_benchmark_needs_means() {
        let spec = crate::env::AdversarialEnvSpec {
            mode: crate::env::AdversarialMode::PhaseSwitch {
                period: crate::env::Period::Rounds(2),
                cost_bank: vec![vec![0.0, 0.5]],
            },
            safe_action: 0,
            rho: 0.0,
            rewards: RewardSequence::FixedVectors {
                vectors: vec![vec![0.3, 0.9]],
                period: crate::env::Period::Rounds(1),
            },
            constraints: 1,
        };
        let env = spec.build(20).unwrap();
        let params = ExperimentParams::new(20, 2, 1, 0.1, 2).unwrap();
        let trace = run_episode(&params, &env, &RunConfig::default()).unwrap();
        assert!(compute_regret(&trace, &env, BenchmarkKind::Stochastic).is_err());
        assert!(positive_violation_in(&trace, &env).is_err());
        // ρ = 0 makes α = 0, so α-regret is minus the collected reward.
        let r = compute_regret(&trace, &env, BenchmarkKind::Adversarial).unwrap();
        assert_eq!(r.alpha, Some(0.0));
        for (reg, earned) in r.regret.iter().zip(&r.cumulative_reward) {
            assert_eq!(*reg, -earned);
            assert!(*reg <= 0.0);
        }
    }

    #[test]
    fn interval_examples() {
        let trace: Vec<_> = (1..=6)
            .map(|t| record(t, vec![1.0], vec![t as f64 / 10.0, -0.1], vec![2.0]))
            .collect();
        assert_eq!(interval_violation(&trace, 0, 3, 3).unwrap(), 0.3);
        let full = interval_violation(&trace, 0, 1, 6).unwrap();
        assert!((full - 2.1).abs() < 1e-12);
        let split = interval_violation(&trace, 0, 1, 4).unwrap() + interval_violation(&trace, 0, 5, 6).unwrap();
        assert!((split - full).abs() < 1e-12);
        assert!(interval_violation(&trace, 0, 0, 2).is_err());
        assert!(interval_violation(&trace, 0, 4, 3).is_err());
        assert!(interval_violation(&trace, 2, 1, 2).is_err());
        let v = max_violation_series(&trace);
        assert!((v[5] - 2.1).abs() < 1e-12);
        assert!((v[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn positive_violation_examples() {
        let trace: Vec<_> = (1..=10)
            .map(|t| record(t, vec![0.4, 0.6], vec![0.0], vec![2.0, 2.0]))
            .collect();
        let vp = positive_violation(&trace, &[vec![-0.3, -0.1]]).unwrap();
        assert!(vp.iter().all(|&v| v == 0.0));
        // ⟨(0.4, 0.6), (0.8, −0.2)⟩ = 0.2 per round.
        let vp = positive_violation(&trace, &[vec![0.8, -0.2]]).unwrap();
        assert!((vp[9] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bonus_budget_first_round_and_monotone() {
        let trace: Vec<_> = (1..=5)
            .map(|t| record(t, vec![0.5, 0.5], vec![0.0], vec![2.0 / t as f64, 1.0]))
            .collect();
        let b = bonus_budget(&trace);
        assert_eq!(b[0], 1.5);
        assert!(b.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn inclusion_on_initial_sets() {
        let trace: Vec<_> = (1..=3)
            .map(|t| record(t, vec![0.5, 0.5], vec![0.0], vec![2.0, 2.0]))
            .collect();
        let x = Strategy::vertex(2, 1).unwrap();
        assert_eq!(inclusion_diagnostics(&trace, &x).unwrap(), 1.0);
    }

    #[test]
    fn interpolation_between_checkpoints() {
        let r = RegretSeries {
            kind: BenchmarkKind::Adversarial,
            checkpoints: vec![10, 20],
            benchmark: vec![0.0; 2],
            cumulative_reward: vec![0.0; 2],
            regret: vec![5.0, 7.0],
            rho: None,
            alpha: None,
        };
        assert_eq!(r.interpolate(5), 2.5);
        assert_eq!(r.interpolate(10), 5.0);
        assert_eq!(r.interpolate(15), 6.0);
        assert_eq!(r.interpolate(30), 7.0);
        assert_eq!(r.final_regret(), 7.0);
    }
}
