//! Fast built-in property checks for the `selftest` subcommand.

use lcb_core::algorithm::{run_episode, RunConfig};
use lcb_core::env::{splitmix64, CostNoise, EnvSpec, RewardSequence, StochasticEnvSpec};
use lcb_core::estimator::weights_from_rates;
use lcb_core::metrics::{bonus_budget, violation_series};
use lcb_core::projection::{kl_project_set, ProjectionConfig};
use lcb_core::{derive_confidence_params, dot, ExperimentParams, FeasibleSet};

use crate::bounds::bonus_budget_bound;
use crate::stats::scaling_slope;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn unit(state: &mut u64) -> f64 {
    *state = splitmix64(*state);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn weights_normalize() -> Check {
    let mut s = 1;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 1 + (unit(&mut s) * 5000.0) as usize;
        let mut rates: Vec<f64> = (0..n).map(|_| unit(&mut s).max(1e-9)).collect();
        rates[0] = 1.0;
        let w = weights_from_rates(&rates).unwrap_or_default();
        worst = worst.max((w.iter().sum::<f64>() - 1.0).abs());
    }
    Check {
        name: "estimator weights sum to 1",
        passed: worst < 1e-12,
        detail: format!("max |Σw − 1| = {worst:.2e}"),
    }
}

fn projection_feasible() -> Check {
    let mut s = 7;
    let cfg = ProjectionConfig::default();
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for _ in 0..200 {
        let raw: Vec<f64> = (0..4).map(|_| 0.01 + unit(&mut s)).collect();
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let mut r: Vec<f64> = (0..4).map(|_| 2.0 * unit(&mut s) - 1.0).collect();
                r[3] = -0.5;
                r
            })
            .collect();
        let set = match FeasibleSet::new(rows) {
            Ok(set) => set,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        match kl_project_set(&raw, &set, &cfg) {
            Ok(r) => {
                let res = set.max_residual(r.result.probs()).unwrap_or(f64::INFINITY);
                worst = worst.max(res);
                ok &= r.converged;
            }
            Err(_) => ok = false,
        }
    }
    Check {
        name: "projection lands in the feasible set",
        passed: ok && worst <= cfg.tol,
        detail: format!("max residual {worst:.2e}"),
    }
}

fn slope_recovery() -> Check {
    let grid = [1000, 4000, 16000, 64000];
    let vals: Vec<f64> = grid.iter().map(|&t| 2.5 * (t as f64).sqrt()).collect();
    let slope = scaling_slope(&grid, &vals).unwrap_or(f64::NAN);
    Check {
        name: "scaling slope of c·√T is 1/2",
        passed: (slope - 0.5).abs() < 1e-9,
        detail: format!("slope {slope}"),
    }
}

fn episode_checks() -> Vec<Check> {
    let spec = EnvSpec::Stochastic(StochasticEnvSpec {
        rewards: RewardSequence::IidBernoulli {
            means: vec![0.9, 0.5, 0.2],
        },
        cost_means: vec![vec![0.6, 0.1, -0.7]],
        cost_noise: CostNoise::BernoulliPm1,
    });
    let run = || {
        let params = ExperimentParams::new(500, 3, 1, 0.05, 11)?;
        let env = spec.build(500, 11)?;
        run_episode(&params, &env, &RunConfig::default()).map_err(|e| e.error)
    };
    let (a, b) = match (run(), run()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return vec![Check {
                name: "episode runs",
                passed: false,
                detail: e.to_string(),
            }]
        }
    };
    let delta2 = derive_confidence_params(&ExperimentParams::new(500, 3, 1, 0.05, 11).unwrap()).delta2;
    let budget = bonus_budget(&a);
    let budget_ok = budget
        .iter()
        .enumerate()
        .all(|(i, &v)| v <= bonus_budget_bound(3, delta2, i + 1));
    let series = violation_series(&a);
    let telescopes = a
        .iter()
        .all(|r| (series[0][r.t - 1] - r.violations_cum[0]).abs() < 1e-12);
    let in_sets = a.iter().filter(|r| !r.feasibility_fallback).all(|r| {
        r.feasible_set
            .constraint_vectors
            .iter()
            .all(|c| dot(c, r.strategy.probs()) <= 1e-9)
    });
    vec![
        Check {
            name: "episodes are bit-reproducible",
            passed: a == b,
            detail: format!("{} rounds", a.len()),
        },
        Check {
            name: "bonus budget within its bound",
            passed: budget_ok,
            detail: format!("final budget {:.2}", budget.last().copied().unwrap_or(0.0)),
        },
        Check {
            name: "violation series telescopes",
            passed: telescopes,
            detail: String::new(),
        },
        Check {
            name: "played strategies lie in the estimated sets",
            passed: in_sets,
            detail: String::new(),
        },
    ]
}

pub fn run_selftest() -> Vec<Check> {
    let mut checks = vec![weights_normalize(), projection_feasible(), slope_recovery()];
    checks.extend(episode_checks());
    checks
}
