//! The per-round loop: estimate, build the optimistic feasible set, project,
//! sample, observe at the sampled action, update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::BanditFeedback;
use crate::error::{check_dim, invalid, Error, Result};
use crate::estimator::{EstimatorState, LearningRateSpec};
use crate::projection::{check_nonempty, ProjectionConfig};
use crate::regret::RegretMinimizer;
use crate::types::{derive_confidence_params, ExperimentParams, FeasibleSet, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    #[serde(default)]
    pub lr_spec: LearningRateSpec,
    #[serde(default)]
    pub projection: ProjectionConfig,
    /// Overrides the multiplier 21 in the `Γ` envelope.
    #[serde(default)]
    pub gamma_cap_constant: Option<f64>,
    /// Overrides `log(1/δ2)` in the `Γ` envelope.
    #[serde(default)]
    pub gamma_log_arg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub strategy: Strategy,
    pub action: usize,
    pub reward: f64,
    pub costs: Vec<f64>,
    /// Cumulative realized violation per constraint after this round.
    pub violations_cum: Vec<f64>,
    pub feasibility_fallback: bool,
    pub projection_cycles: usize,
    pub projection_converged: bool,
    pub gamma_values: Vec<f64>,
    /// Bonus `b_t` used to build this round's feasible set.
    pub bonus: Vec<f64>,
    pub feasible_set: FeasibleSet,
}

/// A run that stopped early, with the rounds completed before the fault.
#[derive(Debug)]
pub struct EpisodeError {
    pub partial: Vec<RoundRecord>,
    pub error: Error,
}

impl std::fmt::Display for EpisodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "episode aborted after {} rounds: {}", self.partial.len(), self.error)
    }
}

impl std::error::Error for EpisodeError {}

/// Inverse-CDF sampling with a single uniform draw.
pub fn sample_action(x: &Strategy, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in x.probs().iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = a;
            if u < acc {
                return a;
            }
        }
    }
    last
}

pub fn run_episode<E: BanditFeedback + ?Sized>(
    params: &ExperimentParams,
    env: &E,
    cfg: &RunConfig,
) -> std::result::Result<Vec<RoundRecord>, EpisodeError> {
    let mut trace = Vec::with_capacity(params.horizon);
    match run_into(params, env, cfg, &mut trace) {
        Ok(()) => Ok(trace),
        Err(error) => Err(EpisodeError {
            partial: trace,
            error,
        }),
    }
}

fn run_into<E: BanditFeedback + ?Sized>(
    params: &ExperimentParams,
    env: &E,
    cfg: &RunConfig,
    trace: &mut Vec<RoundRecord>,
) -> Result<()> {
    params.validate()?;
    cfg.lr_spec.validate()?;
    cfg.projection.validate(params.actions)?;
    check_dim(params.actions, env.actions())?;
    check_dim(params.constraints, env.constraints())?;
    if env.horizon() < params.horizon {
        return Err(invalid("horizon", "environment horizon is shorter than the run"));
    }

    let conf = derive_confidence_params(params);
    let mut estimator = EstimatorState::new(params, conf.delta2);
    if let Some(c) = cfg.gamma_cap_constant {
        estimator.gamma_cap_constant = c;
    }
    if let Some(l) = cfg.gamma_log_arg {
        estimator.log_arg_gamma = l;
    }
    let mut rm = RegretMinimizer::new(params, conf.delta1);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    for t in 1..=params.horizon {
        let set = estimator.feasible_set();
        let bonus = estimator.bonuses();
        let check = check_nonempty(&set, cfg.projection.tol)?;
        let (strategy, cycles, converged, fallback) = if check.nonempty {
            let (x, report) = rm.recommend(&set, &cfg.projection)?;
            (x, report.cycles_used, report.converged, false)
        } else {
            (rm.x_prev.clone(), 0, true, true)
        };

        let action = sample_action(&strategy, rng.gen::<f64>());
        let (reward, costs) = env.point_query(t, action)?;

        rm.update(action, reward)?;
        let gamma_values = estimator.update(action, &costs, &cfg.lr_spec)?;

        trace.push(RoundRecord {
            t,
            strategy,
            action,
            reward,
            costs,
            violations_cum: estimator.cum_violation.clone(),
            feasibility_fallback: fallback,
            projection_cycles: cycles,
            projection_converged: converged,
            gamma_values,
            bonus,
            feasible_set: set,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{
        AdversarialEnvSpec, AdversarialMode, CostNoise, Period, RewardSequence, StochasticEnvSpec,
    };

    fn stochastic(cost_means: Vec<Vec<f64>>, rewards: Vec<f64>) -> StochasticEnvSpec {
        StochasticEnvSpec {
            rewards: RewardSequence::IidBernoulli { means: rewards },
            cost_means,
            cost_noise: CostNoise::BernoulliPm1,
        }
    }

    #[test]
    fn inverse_cdf_sampling() {
        let x = Strategy::new(vec![0.2, 0.0, 0.5, 0.3]).unwrap();
        assert_eq!(sample_action(&x, 0.0), 0);
        assert_eq!(sample_action(&x, 0.199), 0);
        assert_eq!(sample_action(&x, 0.2), 2);
        assert_eq!(sample_action(&x, 0.69), 2);
        assert_eq!(sample_action(&x, 0.71), 3);
        assert_eq!(sample_action(&x, 1.0 - 1e-17), 3);
        let v = Strategy::vertex(3, 1).unwrap();
        assert_eq!(sample_action(&v, 0.999_999), 1);
    }

    #[test]
    fn single_round_single_arm() {
        let params = ExperimentParams::new(1, 1, 1, 0.1, 4).unwrap();
        let env = stochastic(vec![vec![-0.4]], vec![0.7]).build(1, 4).unwrap();
        let trace = run_episode(&params, &env, &RunConfig::default()).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].action, 0);
        let (_, costs) = env.point_query(1, 0).unwrap();
        assert_eq!(trace[0].violations_cum, costs);
    }

    #[test]
    fn never_binding_constraint() {
        let params = ExperimentParams::new(200, 2, 1, 0.1, 8).unwrap();
        let env = stochastic(vec![vec![-1.0, -1.0]], vec![0.2, 0.8]).build(200, 8).unwrap();
        let trace = run_episode(&params, &env, &RunConfig::default()).unwrap();
        let mut prev = 0.0;
        for r in &trace {
            assert!(!r.feasibility_fallback);
            assert!(r.violations_cum[0] < prev);
            prev = r.violations_cum[0];
            assert!(r.feasible_set.constraint_vectors[0].iter().all(|&c| c < 0.0));
        }
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let params = ExperimentParams::new(300, 3, 2, 0.1, 99).unwrap();
        let env = stochastic(
            vec![vec![0.6, -0.2, -0.7], vec![0.1, 0.3, -0.5]],
            vec![0.9, 0.5, 0.2],
        )
        .build(300, 99)
        .unwrap();
        let a = run_episode(&params, &env, &RunConfig::default()).unwrap();
        let b = run_episode(&params, &env, &RunConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn played_strategies_respect_estimated_sets() {
        let params = ExperimentParams::new(400, 3, 2, 0.1, 5).unwrap();
        let env = stochastic(
            vec![vec![0.6, -0.2, -0.7], vec![0.1, 0.3, -0.5]],
            vec![0.9, 0.5, 0.2],
        )
        .build(400, 5)
        .unwrap();
        let cfg = RunConfig::default();
        for r in run_episode(&params, &env, &cfg).unwrap() {
            if !r.feasibility_fallback && r.projection_converged {
                let res = r.feasible_set.max_residual(r.strategy.probs()).unwrap();
                assert!(res <= cfg.projection.tol, "round {}: {res}", r.t);
            }
        }
    }

    #[test]
    fn violations_match_costs_and_faults_keep_partial_trace() {
        let spec = AdversarialEnvSpec {
            mode: AdversarialMode::PhaseSwitch {
                period: Period::Rounds(5),
                cost_bank: vec![vec![0.0, 0.9]],
            },
            safe_action: 0,
            rho: 0.3,
            rewards: RewardSequence::FixedVectors {
                vectors: vec![vec![0.1, 1.0]],
                period: Period::Rounds(1),
            },
            constraints: 1,
        };
        let env = spec.build(50).unwrap();
        let params = ExperimentParams::new(50, 2, 1, 0.1, 1).unwrap();
        let trace = run_episode(&params, &env, &RunConfig::default()).unwrap();
        let mut v = 0.0;
        for r in &trace {
            v += r.costs[0];
            assert!((r.violations_cum[0] - v).abs() < 1e-12);
        }

        let long = params.with_horizon(60);
        let err = run_episode(&long, &env, &RunConfig::default()).unwrap_err();
        assert!(err.partial.is_empty());
    }

    struct Faulty(usize);

    impl BanditFeedback for Faulty {
        fn actions(&self) -> usize {
            2
        }
        fn constraints(&self) -> usize {
            1
        }
        fn horizon(&self) -> usize {
            100
        }
        fn point_query(&self, t: usize, _a: usize) -> Result<(f64, Vec<f64>)> {
            if t > self.0 {
                Err(Error::Environment("sensor offline".into()))
            } else {
                Ok((0.5, vec![-0.5]))
            }
        }
    }

    #[test]
    fn environment_fault_returns_partial_trace() {
        let params = ExperimentParams::new(100, 2, 1, 0.1, 1).unwrap();
        let err = run_episode(&params, &Faulty(7), &RunConfig::default()).unwrap_err();
        assert_eq!(err.partial.len(), 7);
        assert!(matches!(err.error, Error::Environment(_)));
    }
}
