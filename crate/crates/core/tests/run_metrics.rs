use lcb_core::algorithm::{run_episode, sample_action, RoundRecord, RunConfig};
use lcb_core::benchmarks::{opt_stochastic, scaled_safe_set_member};
use lcb_core::env::{
    AdversarialEnvSpec, AdversarialMode, BanditFeedback, CostNoise, EnvSpec, Period, PeriodScale,
    RewardSequence, StochasticEnvSpec,
};
use lcb_core::metrics::{
    bonus_budget, compute_regret, inclusion_diagnostics, interval_violation, positive_violation,
    violation_series, BenchmarkKind, MetricSeries,
};
use lcb_core::{dot, ExperimentParams, FeasibleSet, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stochastic_spec() -> StochasticEnvSpec {
    StochasticEnvSpec {
        rewards: RewardSequence::IidBernoulli {
            means: vec![0.9, 0.6, 0.2],
        },
        cost_means: vec![vec![0.7, 0.1, -0.8], vec![0.2, 0.5, -0.6]],
        cost_noise: CostNoise::BernoulliPm1,
    }
}

fn adversarial_spec(rho: f64) -> AdversarialEnvSpec {
    AdversarialEnvSpec {
        mode: AdversarialMode::PhaseSwitch {
            period: Period::Scaled(PeriodScale::Sqrt),
            cost_bank: vec![vec![0.0, 0.9, -0.4], vec![0.0, -0.6, 0.8]],
        },
        safe_action: 0,
        rho,
        rewards: RewardSequence::FixedVectors {
            vectors: vec![vec![0.2, 0.9, 0.4], vec![0.2, 0.4, 0.9]],
            period: Period::Scaled(PeriodScale::Sqrt),
        },
        constraints: 2,
    }
}

fn run(spec: &EnvSpec, horizon: usize, seed: u64) -> (lcb_core::env::Environment, Vec<RoundRecord>) {
    let env = spec.build(horizon, seed).unwrap();
    let params =
        ExperimentParams::new(horizon, spec.actions(), spec.constraints(), 0.05, seed).unwrap();
    let trace = run_episode(&params, &env, &RunConfig::default()).unwrap();
    (env, trace)
}

#[test]
fn violation_series_telescopes() {
    let (_, trace) = run(&EnvSpec::Stochastic(stochastic_spec()), 500, 3);
    let series = violation_series(&trace);
    for (i, s) in series.iter().enumerate() {
        for t in 1..trace.len() {
            assert!((s[t] - s[t - 1] - trace[t].costs[i]).abs() < 1e-12);
        }
        for r in &trace {
            assert!((s[r.t - 1] - r.violations_cum[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn interval_additivity_on_random_splits() {
    let (_, trace) = run(&EnvSpec::Stochastic(stochastic_spec()), 400, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = trace.len();
    for _ in 0..50 {
        let s = rng.gen_range(1..n);
        for i in 0..2 {
            let whole = interval_violation(&trace, i, 1, n).unwrap();
            let split = interval_violation(&trace, i, 1, s).unwrap()
                + interval_violation(&trace, i, s + 1, n).unwrap();
            assert!((whole - split).abs() < 1e-9);
            assert!((whole - trace[n - 1].violations_cum[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn positive_violation_matches_naive_recomputation() {
    let spec = stochastic_spec();
    let (_, trace) = run(&EnvSpec::Stochastic(spec.clone()), 300, 9);
    let fast = positive_violation(&trace, &spec.cost_means).unwrap();
    for t in 1..=trace.len() {
        let mut best: f64 = 0.0;
        for g in &spec.cost_means {
            let mut acc = 0.0;
            for r in &trace[..t] {
                let mut inner = 0.0;
                for a in 0..g.len() {
                    inner += r.strategy.prob(a) * g[a];
                }
                acc += inner.max(0.0);
            }
            best = best.max(acc);
        }
        assert!((fast[t - 1] - best).abs() < 1e-12);
    }
}

#[test]
fn bonus_budget_single_arm_envelope() {
    let spec = StochasticEnvSpec {
        rewards: RewardSequence::IidBernoulli { means: vec![0.5] },
        cost_means: vec![vec![-0.2]],
        cost_noise: CostNoise::BernoulliPm1,
    };
    let (_, trace) = run(&EnvSpec::Stochastic(spec), 2000, 4);
    let budget = bonus_budget(&trace);
    let delta2: f64 = 0.05 / (14.0 * 2000.0 * 2000.0);
    let c = (2.0 * (2.0 / delta2).ln()).sqrt();
    assert_eq!(budget[0], 2.0);
    for (i, &b) in budget.iter().enumerate() {
        let t = (i + 1) as f64;
        // Round t sees n = t − 1 plays: 2 + Σ_{k=1}^{t−1} min(2, c/√k).
        let exact: f64 = 2.0 + (1..=i).map(|k| (c / (k as f64).sqrt()).min(2.0)).sum::<f64>();
        assert!((b - exact).abs() < 1e-9);
        assert!(b <= 2.0 + 2.0 * c * t.sqrt());
    }
}

#[test]
fn oracle_playback_has_zero_mean_regret() {
    let spec = stochastic_spec();
    let horizon = 500;
    let mut finals = Vec::new();
    for seed in 0..50u64 {
        let env = EnvSpec::Stochastic(spec.clone()).build(horizon, seed).unwrap();
        let means: Vec<f64> = match &spec.rewards {
            RewardSequence::IidBernoulli { means } => means.iter().map(|m| m * horizon as f64).collect(),
            _ => unreachable!(),
        };
        let (_, x_star) = opt_stochastic(&means, &spec.cost_means).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let set = FeasibleSet::new(vec![vec![-2.0; 3]; 2]).unwrap();
        let trace: Vec<RoundRecord> = (1..=horizon)
            .map(|t| {
                let a = sample_action(&x_star, rng.gen());
                let (reward, costs) = env.point_query(t, a).unwrap();
                RoundRecord {
                    t,
                    strategy: x_star.clone(),
                    action: a,
                    reward,
                    violations_cum: vec![0.0; 2],
                    costs,
                    feasibility_fallback: false,
                    projection_cycles: 0,
                    projection_converged: true,
                    gamma_values: vec![0.0; 2],
                    bonus: vec![0.0; 3],
                    feasible_set: set.clone(),
                }
            })
            .collect();
        let r = compute_regret(&trace, &env, BenchmarkKind::Stochastic).unwrap();
        finals.push(r.final_regret());
    }
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let sd = (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / n.sqrt(), "mean {mean} sd {sd}");
}

#[test]
fn stochastic_inclusion_of_optimum() {
    let spec = stochastic_spec();
    let mut full = 0;
    for seed in 0..10 {
        let (env, trace) = run(&EnvSpec::Stochastic(spec.clone()), 1500, seed);
        let m = MetricSeries::compute(&trace, &env, BenchmarkKind::Stochastic).unwrap();
        assert!(m.positive_violation.is_some());
        let (_, x_star) = opt_stochastic(&[0.9, 0.6, 0.2], &spec.cost_means).unwrap();
        let frac = inclusion_diagnostics(&trace, &x_star).unwrap();
        assert!(frac >= 0.95);
        if frac == 1.0 {
            full += 1;
        }
    }
    assert!(full >= 9);
}

#[test]
fn adversarial_scaled_set_is_always_included() {
    let spec = adversarial_spec(0.5);
    let (_, trace) = run(&EnvSpec::Adversarial(spec.clone()), 2000, 7);
    assert!(trace.iter().all(|r| !r.feasibility_fallback));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let raw: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
        let x = Strategy::normalized(raw).unwrap();
        let tilde = scaled_safe_set_member(&x, 0.5, spec.safe_action).unwrap();
        assert_eq!(inclusion_diagnostics(&trace, &tilde).unwrap(), 1.0);
    }
}

#[test]
fn zero_rho_alpha_regret_is_nonpositive() {
    let spec = adversarial_spec(0.0);
    let (env, trace) = run(&EnvSpec::Adversarial(spec), 800, 2);
    let r = compute_regret(&trace, &env, BenchmarkKind::Adversarial).unwrap();
    assert_eq!(r.alpha, Some(0.0));
    assert!(r.regret.iter().all(|&v| v <= 0.0));
}

#[test]
fn metrics_are_bit_stable() {
    let spec = EnvSpec::Stochastic(stochastic_spec());
    let (env, trace) = run(&spec, 700, 12);
    let a = MetricSeries::compute(&trace, &env, BenchmarkKind::Stochastic).unwrap();
    let b = MetricSeries::compute(&trace, &env, BenchmarkKind::Stochastic).unwrap();
    assert_eq!(a, b);
    let (_, again) = run(&spec, 700, 12);
    assert_eq!(trace, again);
}

#[test]
fn played_strategies_are_in_estimated_sets() {
    let (_, trace) = run(&EnvSpec::Stochastic(stochastic_spec()), 1500, 21);
    for r in &trace {
        if !r.feasibility_fallback {
            for c in &r.feasible_set.constraint_vectors {
                assert!(dot(c, r.strategy.probs()) <= 1e-9);
            }
        }
    }
}
