//! Multi-repetition execution: one job per `(T, repetition)` cell, run on a
//! worker pool, each producing a trace CSV and a summary; summaries are
//! sorted by `(T, rep)` and folded into the aggregate JSON.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use lcb_core::algorithm::{run_episode, RoundRecord};
use lcb_core::benchmarks::{opt_adversarial, opt_stochastic, scaled_safe_set_member};
use lcb_core::env::{splitmix64, EnvSpec, Environment, FullInformation, RewardSequence};
use lcb_core::metrics::{checkpoints, BenchmarkKind, MetricSeries};
use lcb_core::{derive_confidence_params, Strategy};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    bonus_budget_bound, positive_violation_bound, regret_bound, violation_bound, BoundVerdict,
};
use crate::config::{Emit, ExperimentConfig};
use crate::error::HarnessError;
use crate::stats::{median, scaling_slope, MeanStd};
use crate::svg::{self, Chart, Series};

/// Odd constant mixed with the repetition index before hashing.
pub const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// `splitmix64(master ^ rep·0x9E3779B97F4A7C15)`.
pub fn derive_seed(master: u64, repetition: usize) -> u64 {
    splitmix64(master ^ (repetition as u64).wrapping_mul(SEED_MIX))
}

pub fn regime(env: &EnvSpec) -> BenchmarkKind {
    match env {
        EnvSpec::Stochastic(_) => BenchmarkKind::Stochastic,
        EnvSpec::Adversarial(_) => BenchmarkKind::Adversarial,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: usize,
    pub repetition: usize,
    pub seed: u64,
    pub trace_file: Option<String>,
    pub total_reward: f64,
    /// `R_T`, or the `α`-regret in the adversarial regime.
    pub final_regret: f64,
    /// `V_T = max_i V_T^{(i)}`.
    pub final_violation: f64,
    pub final_positive_violation: Option<f64>,
    /// `max_t V_t / (53·√(K·t·log(28mKT²/ε)))`.
    pub violation_ratio: f64,
    /// `max_t V⁺_t / (16·√(K·t·log(28mKT²/ε)))`.
    pub positive_violation_ratio: Option<f64>,
    /// Largest ratio of the bonus budget to its bound over the checkpoints.
    pub bonus_budget_ratio: f64,
    /// Fraction of rounds whose estimated set contains the reference point.
    pub inclusion: f64,
    pub fallback_rounds: usize,
    pub nonconverged_rounds: usize,
    pub max_gamma: f64,
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    pub verdicts: Vec<BoundVerdict>,
}

/// Checkpoint curves kept in memory for charts.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub checkpoints: Vec<usize>,
    pub regret: Vec<f64>,
    pub violation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub curves: Curves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonAggregate {
    pub horizon: usize,
    pub runs: usize,
    pub regret: MeanStd,
    pub violation: MeanStd,
    pub positive_violation: Option<MeanStd>,
    pub regret_bound: f64,
    pub violation_bound: f64,
}

/// Log-log slopes of the per-horizon medians, each floored at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub regret_slope: f64,
    pub violation_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub regime: BenchmarkKind,
    pub master_seed: u64,
    pub epsilon: f64,
    pub actions: usize,
    pub constraints: usize,
    pub repetitions: usize,
    pub horizon_grid: Vec<usize>,
    pub horizons: Vec<HorizonAggregate>,
    pub scaling: Option<Scaling>,
    /// Per horizon and bound: failure rate against its allowance.
    pub verdicts: Vec<BoundVerdict>,
    pub runs: Vec<RunSummary>,
}

impl Aggregate {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub aggregate: Aggregate,
    pub outcomes: Vec<RunOutcome>,
    /// Files written, in path order.
    pub files: Vec<PathBuf>,
}

/// Tracks files written so an aborted experiment can be rolled back.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Mutex<Vec<PathBuf>>,
}

impl Outputs {
    fn open(dir: &Path) -> Result<Self, HarnessError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            files: Mutex::new(Vec::new()),
        })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join(name);
        self.files.lock().unwrap().push(path.clone());
        let mut f = fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        f.write_all(bytes).map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }

    fn rollback(&self) {
        for path in self.files.lock().unwrap().drain(..) {
            let _ = fs::remove_file(path);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }

    fn into_files(self) -> Vec<PathBuf> {
        let mut files = self.files.into_inner().unwrap();
        files.sort();
        files
    }
}

pub fn trace_file_name(horizon: usize, repetition: usize) -> String {
    format!("trace_T{horizon}_rep{repetition:03}.csv")
}

pub const AGGREGATE_FILE: &str = "aggregate.json";

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let writes_files = !config.emit.is_empty();
    let outputs = if writes_files {
        Some(Outputs::open(&config.output_dir)?)
    } else {
        None
    };
    let result = execute(config, outputs.as_ref());
    match (result, outputs) {
        (Ok((aggregate, outcomes)), outputs) => Ok(ExperimentReport {
            aggregate,
            outcomes,
            files: outputs.map(Outputs::into_files).unwrap_or_default(),
        }),
        (Err(e), outputs) => {
            if let Some(o) = outputs {
                o.rollback();
            }
            Err(e)
        }
    }
}

fn execute(
    config: &ExperimentConfig,
    outputs: Option<&Outputs>,
) -> Result<(Aggregate, Vec<RunOutcome>), HarnessError> {
    let jobs: Vec<(usize, usize)> = config
        .horizon_grid
        .iter()
        .flat_map(|&t| (0..config.repetitions).map(move |r| (t, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Run {
            horizon: 0,
            repetition: 0,
            message: format!("cannot start worker pool: {e}"),
        })?;
    let mut outcomes: Vec<RunOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(horizon, rep)| run_cell(config, horizon, rep, outputs))
            .collect::<Result<Vec<_>, _>>()
    })?;
    outcomes.sort_by_key(|o| (o.summary.horizon, o.summary.repetition));

    let aggregate = aggregate(config, &outcomes)?;
    if let Some(out) = outputs {
        if config.emits(Emit::Json) {
            let json = serde_json::to_string_pretty(&aggregate)
                .map_err(|e| HarnessError::format(AGGREGATE_FILE, e))?;
            out.write(AGGREGATE_FILE, json.as_bytes())?;
        }
        if config.emits(Emit::Svg) {
            for (name, body) in charts(config, &outcomes) {
                out.write(&name, body.as_bytes())?;
            }
        }
    }
    Ok((aggregate, outcomes))
}

fn run_cell(
    config: &ExperimentConfig,
    horizon: usize,
    rep: usize,
    outputs: Option<&Outputs>,
) -> Result<RunOutcome, HarnessError> {
    let fail = |message: String| HarnessError::Run {
        horizon,
        repetition: rep,
        message,
    };
    let seed = derive_seed(config.params.seed, rep);
    let params = config.params.with_horizon(horizon).with_seed(seed);
    let env = config.env.build(horizon, seed)?;
    let trace = run_episode(&params, &env, &config.run_config()).map_err(|e| fail(e.to_string()))?;
    let kind = regime(&config.env);
    let metrics = MetricSeries::compute(&trace, &env, kind)?;

    let trace_file = match outputs {
        Some(out) if config.emits(Emit::Csv) => {
            let name = trace_file_name(horizon, rep);
            out.write(&name, &trace_csv(&trace, &metrics)?)?;
            Some(name)
        }
        _ => None,
    };

    let x_ref = reference_point(&config.env, &env, &metrics)?;
    let inclusion = lcb_core::metrics::inclusion_diagnostics(&trace, &x_ref)?;
    let summary = summarize(config, horizon, rep, seed, trace_file, &trace, &metrics, inclusion);
    info!(
        "T={horizon} rep={rep}: R_T={:.1} V_T={:.1}",
        summary.final_regret, summary.final_violation
    );
    let curves = Curves {
        checkpoints: metrics.regret.checkpoints.clone(),
        regret: metrics.regret.regret.clone(),
        violation: metrics
            .regret
            .checkpoints
            .iter()
            .map(|&t| metrics.max_violation[t - 1])
            .collect(),
    };
    Ok(RunOutcome { summary, curves })
}

/// `x*` for stochastic runs; for adversarial runs, the best fixed arm mixed
/// toward the safe action so that it lies in every `X∅,t`.
fn reference_point(
    spec: &EnvSpec,
    env: &Environment,
    metrics: &MetricSeries,
) -> Result<Strategy, HarnessError> {
    let horizon = lcb_core::env::BanditFeedback::horizon(env);
    let reward_sums = || -> Result<Vec<f64>, HarnessError> {
        let mut sums = vec![0.0; spec.actions()];
        for t in 1..=horizon {
            for (s, r) in sums.iter_mut().zip(&env.full_vectors(t)?.0.rewards) {
                *s += r;
            }
        }
        Ok(sums)
    };
    Ok(match spec {
        EnvSpec::Stochastic(s) => {
            let expected = match &s.rewards {
                RewardSequence::IidBernoulli { means } => means.clone(),
                RewardSequence::FixedVectors { .. } => reward_sums()?,
            };
            opt_stochastic(&expected, &s.cost_means)?.1
        }
        EnvSpec::Adversarial(a) => {
            let (_, arm) = opt_adversarial(&reward_sums()?);
            let rho = metrics.regret.rho.unwrap_or(a.rho).max(0.0);
            scaled_safe_set_member(&Strategy::vertex(spec.actions(), arm)?, rho, a.safe_action)?
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    config: &ExperimentConfig,
    horizon: usize,
    repetition: usize,
    seed: u64,
    trace_file: Option<String>,
    trace: &[RoundRecord],
    metrics: &MetricSeries,
    inclusion: f64,
) -> RunSummary {
    let p = config.params.with_horizon(horizon);
    let (k, m, eps) = (p.actions, p.constraints, p.epsilon);
    let delta2 = derive_confidence_params(&p).delta2;

    let ratio_max = |series: &[f64], bound: &dyn Fn(usize) -> f64| {
        series
            .iter()
            .enumerate()
            .map(|(i, v)| v / bound(i + 1))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let violation_ratio = ratio_max(&metrics.max_violation, &|t| violation_bound(k, m, horizon, eps, t));
    let positive_violation_ratio = metrics
        .positive_violation
        .as_ref()
        .map(|s| ratio_max(s, &|t| positive_violation_bound(k, m, horizon, eps, t)));
    let bonus_budget_ratio = checkpoints(trace.len())
        .into_iter()
        .map(|t| metrics.bonus_budget[t - 1] / bonus_budget_bound(k, delta2, t))
        .fold(f64::NEG_INFINITY, f64::max);

    let final_regret = metrics.regret.final_regret();
    let r_bound = regret_bound(k, horizon, eps);
    let mut verdicts = vec![
        BoundVerdict::new("violations", 1.0, violation_ratio),
        BoundVerdict::new("regret", r_bound, final_regret),
        BoundVerdict::new("bonus_budget", 1.0, bonus_budget_ratio),
    ];
    if let Some(r) = positive_violation_ratio {
        verdicts.push(BoundVerdict::new("positive_violations", 1.0, r));
    }

    RunSummary {
        horizon,
        repetition,
        seed,
        trace_file,
        total_reward: metrics.cumulative_reward.last().copied().unwrap_or(0.0),
        final_regret,
        final_violation: metrics.max_violation.last().copied().unwrap_or(0.0),
        final_positive_violation: metrics.positive_violation.as_ref().and_then(|s| s.last().copied()),
        violation_ratio,
        positive_violation_ratio,
        bonus_budget_ratio,
        inclusion,
        fallback_rounds: trace.iter().filter(|r| r.feasibility_fallback).count(),
        nonconverged_rounds: trace.iter().filter(|r| !r.projection_converged).count(),
        max_gamma: trace
            .iter()
            .flat_map(|r| r.gamma_values.iter().copied())
            .fold(0.0, f64::max),
        rho: metrics.regret.rho,
        alpha: metrics.regret.alpha,
        verdicts,
    }
}

/// Allowed failure rate per bound: `ε` for the high-probability theorems,
/// zero for the deterministic bonus budget.
fn allowance(name: &str, epsilon: f64) -> f64 {
    if name == "bonus_budget" {
        0.0
    } else {
        epsilon
    }
}

fn aggregate(config: &ExperimentConfig, outcomes: &[RunOutcome]) -> Result<Aggregate, HarnessError> {
    let p = &config.params;
    let mut horizons = Vec::new();
    let mut verdicts = Vec::new();
    for &horizon in &config.horizon_grid {
        let runs: Vec<&RunSummary> = outcomes
            .iter()
            .map(|o| &o.summary)
            .filter(|s| s.horizon == horizon)
            .collect();
        let col = |f: &dyn Fn(&RunSummary) -> f64| runs.iter().map(|s| f(s)).collect::<Vec<_>>();
        let positive: Option<Vec<f64>> = runs.iter().map(|s| s.final_positive_violation).collect();
        horizons.push(HorizonAggregate {
            horizon,
            runs: runs.len(),
            regret: MeanStd::of(&col(&|s| s.final_regret)),
            violation: MeanStd::of(&col(&|s| s.final_violation)),
            positive_violation: positive.map(|v| MeanStd::of(&v)),
            regret_bound: regret_bound(p.actions, horizon, p.epsilon),
            violation_bound: violation_bound(p.actions, p.constraints, horizon, p.epsilon, horizon),
        });
        let names: Vec<String> = runs[0].verdicts.iter().map(|v| v.name.clone()).collect();
        for name in names {
            let failures = runs
                .iter()
                .filter(|s| s.verdicts.iter().any(|v| v.name == name && !v.holds))
                .count();
            let rate = failures as f64 / runs.len() as f64;
            verdicts.push(BoundVerdict::new(
                format!("{name}@T={horizon}"),
                allowance(&name, p.epsilon),
                rate,
            ));
        }
    }
    let scaling = if config.horizon_grid.len() >= 3 {
        let floored = |f: fn(&HorizonAggregate) -> f64| -> Vec<f64> {
            horizons.iter().map(|h| f(h).max(1.0)).collect()
        };
        let slope = |v: Vec<f64>| {
            scaling_slope(&config.horizon_grid, &v)
                .map_err(|e| HarnessError::format(AGGREGATE_FILE, e))
        };
        Some(Scaling {
            regret_slope: slope(floored(|h| h.regret.median))?,
            violation_slope: slope(floored(|h| h.violation.median))?,
        })
    } else {
        None
    };
    Ok(Aggregate {
        regime: regime(&config.env),
        master_seed: p.seed,
        epsilon: p.epsilon,
        actions: p.actions,
        constraints: p.constraints,
        repetitions: config.repetitions,
        horizon_grid: config.horizon_grid.clone(),
        horizons,
        scaling,
        verdicts,
        runs: outcomes.iter().map(|o| o.summary.clone()).collect(),
    })
}

/// Floats with 17 significant digits, which round-trip exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(constraints: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "action".into(), "reward".into()];
    h.extend((1..=constraints).map(|i| format!("cost_{i}")));
    h.extend((1..=constraints).map(|i| format!("V_{i}")));
    h.extend(["V_t", "regret_checkpoint", "fallback_flag", "projection_cycles"].map(String::from));
    h
}

fn trace_csv(trace: &[RoundRecord], metrics: &MetricSeries) -> Result<Vec<u8>, HarnessError> {
    let m = trace.first().map_or(0, |r| r.costs.len());
    let mut w = csv::Writer::from_writer(Vec::with_capacity(trace.len() * 64 * (m + 2)));
    let err = |e: csv::Error| HarnessError::format("trace.csv", e);
    w.write_record(csv_header(m)).map_err(err)?;
    let regret = &metrics.regret;
    let mut next = regret.checkpoints.iter().zip(&regret.regret).peekable();
    for rec in trace {
        let mut row = vec![rec.t.to_string(), rec.action.to_string(), fmt_float(rec.reward)];
        row.extend(rec.costs.iter().map(|&c| fmt_float(c)));
        row.extend(rec.violations_cum.iter().map(|&v| fmt_float(v)));
        row.push(fmt_float(metrics.max_violation[rec.t - 1]));
        match next.peek() {
            Some((&c, &r)) if c == rec.t => {
                row.push(fmt_float(r));
                next.next();
            }
            _ => row.push(String::new()),
        }
        row.push(u8::from(rec.feasibility_fallback).to_string());
        row.push(rec.projection_cycles.to_string());
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::format("trace.csv", e.error()))
}

fn charts(config: &ExperimentConfig, outcomes: &[RunOutcome]) -> Vec<(String, String)> {
    let p = &config.params;
    let mut out = Vec::new();
    for &horizon in &config.horizon_grid {
        let runs: Vec<&Curves> = outcomes
            .iter()
            .filter(|o| o.summary.horizon == horizon)
            .map(|o| &o.curves)
            .collect();
        let marks = &runs[0].checkpoints;
        let median_at = |pick: fn(&Curves) -> &Vec<f64>| -> Vec<(f64, f64)> {
            marks
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let vals: Vec<f64> = runs.iter().map(|c| pick(c)[i]).collect();
                    (t as f64, median(&vals))
                })
                .collect()
        };
        let envelope = |f: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
            marks.iter().map(|&t| (t as f64, f(t))).collect()
        };
        let regret_chart = Chart {
            title: format!("Median regret, T = {horizon}"),
            x_label: "t".into(),
            y_label: "regret".into(),
            log_log: config.log_log_charts,
            series: vec![
                Series::solid("median regret", median_at(|c| &c.regret)),
                Series::dashed(
                    "bound 4√(Kt log(2K/ε))",
                    envelope(&|t| regret_bound(p.actions, t, p.epsilon)),
                ),
            ],
        };
        let violation_chart = Chart {
            title: format!("Median violation, T = {horizon}"),
            x_label: "t".into(),
            y_label: "V_t".into(),
            log_log: config.log_log_charts,
            series: vec![
                Series::solid("median V_t", median_at(|c| &c.violation)),
                Series::dashed(
                    "bound 53√(Kt log(28mKT²/ε))",
                    envelope(&|t| violation_bound(p.actions, p.constraints, horizon, p.epsilon, t)),
                ),
            ],
        };
        out.push((format!("regret_T{horizon}.svg"), svg::render(&regret_chart)));
        out.push((format!("violation_T{horizon}.svg"), svg::render(&violation_chart)));
    }
    out
}
