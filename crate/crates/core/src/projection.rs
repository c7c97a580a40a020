//! Negative-entropy (KL) Bregman projection onto the simplex intersected with
//! a finite set of halfspaces.
//!
//! A single halfspace has a closed form up to one scalar: the projection of
//! `x` is `y ∝ x · exp(−λ c)` with `λ ≥ 0` chosen so the constraint is tight
//! (or `λ = 0` when it already holds). Intersections are handled with the
//! Bregman variant of Dykstra's algorithm, whose correction terms live in the
//! mirror (log) space. All iterates are kept as log-weights so strongly
//! tilted vectors do not underflow.

use serde::{Deserialize, Serialize};

use crate::benchmarks::{lp_solve, LpProblem, LpStatus};
use crate::error::{check_dim, invalid, Error, Result};
use crate::types::{dot, FeasibleSet, Strategy};

const BISECTION_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    /// Convergence tolerance on constraint residuals and iterate movement (L1).
    pub tol: f64,
    pub max_cycles: usize,
    /// Minimum probability per coordinate in the returned strategy.
    pub prob_floor: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_cycles: 10_000,
            prob_floor: 1e-12,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self, actions: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if self.max_cycles == 0 {
            return Err(invalid("max_cycles", "must be at least 1"));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor < 1.0 / actions as f64) {
            return Err(invalid("prob_floor", "must lie in (0, 1/K)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub result: Strategy,
    pub cycles_used: usize,
    /// Largest `⟨result, c_i⟩` over the constraints.
    pub max_residual: f64,
    pub converged: bool,
}

/// Normalized tilt `log y_λ = log z − λ c − logsumexp(·)`; returns `⟨y_λ, c⟩`.
fn tilt(log_z: &[f64], c: &[f64], lambda: f64, log_y: &mut [f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for ((ly, lz), ca) in log_y.iter_mut().zip(log_z).zip(c) {
        *ly = lz - lambda * ca;
        max = max.max(*ly);
    }
    let sum: f64 = log_y.iter().map(|ly| (ly - max).exp()).sum();
    let log_norm = max + sum.ln();
    let mut phi = 0.0;
    for (ly, ca) in log_y.iter_mut().zip(c) {
        *ly -= log_norm;
        phi += ly.exp() * ca;
    }
    phi
}

/// Projects the positive weights `exp(log_z)` onto `{y ∈ Δ : ⟨y, c⟩ ≤ 0}`,
/// writing log-probabilities into `log_y`.
fn project_halfspace_log(log_z: &[f64], c: &[f64], tol: f64, log_y: &mut [f64]) -> Result<()> {
    if tilt(log_z, c, 0.0, log_y) <= 0.0 {
        return Ok(());
    }
    let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
    if min_c > 0.0 {
        return Err(Error::Infeasible(format!(
            "halfspace excludes the simplex (min coefficient {min_c})"
        )));
    }
    // With min_c == 0 the constraint is only met in the limit; accept a
    // residual well inside tolerance.
    let target = if min_c == 0.0 { tol * 1e-3 } else { 0.0 };

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while tilt(log_z, c, hi, log_y) > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > BISECTION_ITERS {
            return Err(Error::Numeric("could not bracket the tilt parameter".into()));
        }
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
            tilt(log_z, c, hi, log_y);
            return Ok(());
        }
        if tilt(log_z, c, mid, log_y) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric(
        "tilt bisection did not converge in 200 iterations".into(),
    ))
}

fn check_positive(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(invalid("x", "empty vector"));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("x", "entries must be finite and strictly positive"));
    }
    Ok(())
}

/// KL projection of the positive vector `x` onto `Δ_K ∩ {y : ⟨y, c⟩ ≤ 0}`.
pub fn kl_project_halfspace(x: &[f64], c: &[f64], tol: f64) -> Result<Vec<f64>> {
    check_positive(x)?;
    check_dim(x.len(), c.len())?;
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mut log_y = vec![0.0; x.len()];
    project_halfspace_log(&log_x, c, tol, &mut log_y)?;
    Ok(log_y.into_iter().map(f64::exp).collect())
}

fn floor_and_normalize(mut x: Vec<f64>, floor: f64) -> Vec<f64> {
    x.iter_mut().for_each(|v| *v = v.max(floor));
    let sum: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= sum);
    x
}

/// Bregman projection of `x_hat` onto the feasible set via Dykstra cycles.
///
/// When `max_cycles` is exhausted the report carries `converged = false` and
/// the iterate with the smallest residual seen.
pub fn kl_project_set(
    x_hat: &[f64],
    set: &FeasibleSet,
    cfg: &ProjectionConfig,
) -> Result<ProjectionReport> {
    check_positive(x_hat)?;
    check_dim(set.actions(), x_hat.len())?;
    let k = x_hat.len();
    let m = set.constraints();

    let total: f64 = x_hat.iter().sum();
    let mut log_x: Vec<f64> = x_hat.iter().map(|v| (v / total).ln()).collect();
    let mut corrections = vec![vec![0.0; k]; m];
    let mut log_z = vec![0.0; k];
    let mut log_y = vec![0.0; k];
    let mut prev: Vec<f64> = log_x.iter().map(|v| v.exp()).collect();
    let mut current = vec![0.0; k];
    let mut best: Option<(f64, Vec<f64>)> = None;

    for cycle in 1..=cfg.max_cycles {
        for (c, q) in set.constraint_vectors.iter().zip(corrections.iter_mut()) {
            for ((z, x), qa) in log_z.iter_mut().zip(&log_x).zip(q.iter()) {
                *z = x + qa;
            }
            project_halfspace_log(&log_z, c, cfg.tol, &mut log_y)?;
            for ((qa, z), y) in q.iter_mut().zip(&log_z).zip(&log_y) {
                *qa = z - y;
            }
            std::mem::swap(&mut log_x, &mut log_y);
        }
        for (cur, lx) in current.iter_mut().zip(&log_x) {
            *cur = lx.exp();
        }
        let residual = set
            .constraint_vectors
            .iter()
            .map(|c| dot(c, &current))
            .fold(f64::NEG_INFINITY, f64::max);
        let movement: f64 = current.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();

        if residual <= cfg.tol && movement < cfg.tol {
            let result = floor_and_normalize(current, cfg.prob_floor);
            let max_residual = set.max_residual(&result)?;
            return Ok(ProjectionReport {
                result: Strategy::from_raw(result),
                cycles_used: cycle,
                max_residual,
                converged: max_residual <= cfg.tol,
            });
        }
        if best.as_ref().map_or(true, |(r, _)| residual < *r) {
            best = Some((residual, current.clone()));
        }
        std::mem::swap(&mut prev, &mut current);
    }

    let (_, iterate) = best.expect("at least one cycle runs");
    let result = floor_and_normalize(iterate, cfg.prob_floor);
    let max_residual = set.max_residual(&result)?;
    Ok(ProjectionReport {
        result: Strategy::from_raw(result),
        cycles_used: cfg.max_cycles,
        max_residual,
        converged: false,
    })
}

/// Outcome of the feasibility LP `min s` s.t. `⟨x, c_i⟩ ≤ s`, `x ∈ Δ_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonemptyCheck {
    pub nonempty: bool,
    /// A member of the set, present iff `nonempty`.
    pub witness: Option<Strategy>,
    /// Optimal `s`: the smallest achievable worst-case constraint value.
    pub slack: f64,
    /// The strategy attaining `slack`.
    pub minimax_point: Strategy,
}

pub fn check_nonempty(set: &FeasibleSet, tol: f64) -> Result<NonemptyCheck> {
    let k = set.actions();
    let m = set.constraints();

    // A vertex that satisfies every constraint settles it without an LP.
    let vertex = (0..k)
        .map(|a| {
            let worst = set
                .constraint_vectors
                .iter()
                .map(|c| c[a])
                .fold(f64::NEG_INFINITY, f64::max);
            (worst, a)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("at least one action");
    if vertex.0 <= tol {
        let point = Strategy::vertex(k, vertex.1)?;
        return Ok(NonemptyCheck {
            nonempty: true,
            witness: Some(point.clone()),
            slack: vertex.0,
            minimax_point: point,
        });
    }

    // Variables: x (K), s⁺, s⁻. Maximize s⁻ − s⁺.
    let mut objective = vec![0.0; k + 2];
    objective[k] = -1.0;
    objective[k + 1] = 1.0;
    let mut simplex_row = vec![1.0; k + 2];
    simplex_row[k] = 0.0;
    simplex_row[k + 1] = 0.0;
    let mut lp = LpProblem::new(objective).eq(simplex_row, 1.0);
    for c in &set.constraint_vectors {
        let mut row = c.clone();
        row.push(-1.0);
        row.push(1.0);
        lp = lp.leq(row, 0.0);
    }
    debug_assert_eq!(lp.ineq_matrix.len(), m);
    let sol = lp_solve(&lp, 1e-12)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numeric(format!(
            "feasibility LP ended with status {:?}",
            sol.status
        )));
    }
    let point = Strategy::normalized(sol.x[..k].to_vec())?;
    let slack = set.max_residual(point.probs())?;
    let nonempty = slack <= tol;
    Ok(NonemptyCheck {
        nonempty,
        witness: nonempty.then(|| point.clone()),
        slack,
        minimax_point: point,
    })
}
