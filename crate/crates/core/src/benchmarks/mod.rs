//! Exact benchmark values for both constraint regimes.

mod simplex;

pub use simplex::{lp_solve, LpProblem, LpSolution, LpStatus};

use crate::error::{check_dim, Error, Result};
use crate::types::Strategy;

/// Tolerance handed to the LP solver for benchmark problems.
pub const LP_TOL: f64 = 1e-10;

/// Best fixed strategy satisfying every constraint in expectation:
/// `max ⟨x, reward_sums⟩` over `{x ∈ Δ_K : ⟨x, ḡ^{(i)}⟩ ≤ 0 ∀i}`.
pub fn opt_stochastic(reward_sums: &[f64], cost_means: &[Vec<f64>]) -> Result<(f64, Strategy)> {
    let k = reward_sums.len();
    let mut lp = LpProblem::new(reward_sums.to_vec()).on_simplex();
    for row in cost_means {
        check_dim(k, row.len())?;
        lp = lp.leq(row.clone(), 0.0);
    }
    let sol = lp_solve(&lp, LP_TOL)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol.value, Strategy::normalized(sol.x)?)),
        LpStatus::Infeasible => Err(Error::Infeasible(
            "no strategy satisfies the expected constraints".into(),
        )),
        LpStatus::Unbounded => Err(Error::Numeric("simplex LP reported unbounded".into())),
    }
}

/// Best unconstrained strategy. A linear objective on the simplex peaks at a
/// vertex; ties go to the lowest index.
pub fn opt_adversarial(reward_sums: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (a, &v) in reward_sums.iter().enumerate() {
        if v > best.0 {
            best = (v, a);
        }
    }
    best
}

/// The point `x∅/(1+ρ) + ρ x/(1+ρ)` of the scaled safe set, where `x∅` is the
/// unit vector on `safe_action`.
pub fn scaled_safe_set_member(x: &Strategy, rho: f64, safe_action: usize) -> Result<Strategy> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "rho",
            reason: format!("must be a finite nonnegative number, got {rho}"),
        });
    }
    if safe_action >= x.len() {
        return Err(Error::OutOfRange {
            index: safe_action,
            limit: x.len(),
        });
    }
    let w_safe = 1.0 / (1.0 + rho);
    let w_rest = rho / (1.0 + rho);
    let mut probs: Vec<f64> = x.probs().iter().map(|p| w_rest * p).collect();
    probs[safe_action] += w_safe;
    Strategy::normalized(probs)
}
