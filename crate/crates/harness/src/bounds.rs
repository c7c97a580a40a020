//! Closed-form guarantees checked against realized runs.

use serde::{Deserialize, Serialize};

/// `4·√(K·T·log(2K/ε))`, the regret bound (also the `α`-regret bound in the
/// adversarial regime).
pub fn regret_bound(actions: usize, horizon: usize, epsilon: f64) -> f64 {
    let k = actions as f64;
    4.0 * (k * horizon as f64 * (2.0 * k / epsilon).ln()).sqrt()
}

fn violation_log(actions: usize, constraints: usize, horizon: usize, epsilon: f64) -> f64 {
    let t = horizon as f64;
    (28.0 * constraints as f64 * actions as f64 * t * t / epsilon).ln()
}

/// `53·√(K·t·log(28mKT²/ε))`, the anytime violation bound.
pub fn violation_bound(
    actions: usize,
    constraints: usize,
    horizon: usize,
    epsilon: f64,
    t: usize,
) -> f64 {
    53.0 * (actions as f64 * t as f64 * violation_log(actions, constraints, horizon, epsilon)).sqrt()
}

/// `16·√(K·t·log(28mKT²/ε))`, the anytime positive-violation bound.
pub fn positive_violation_bound(
    actions: usize,
    constraints: usize,
    horizon: usize,
    epsilon: f64,
    t: usize,
) -> f64 {
    16.0 * (actions as f64 * t as f64 * violation_log(actions, constraints, horizon, epsilon)).sqrt()
}

/// `2c·√(Kt) + 4·√(t·log(1/δ2)) + 2K` with `c = √(2·log(2/δ2))`; the last
/// term pays for the `b = 2` bonus of arms not yet played.
pub fn bonus_budget_bound(actions: usize, delta2: f64, t: usize) -> f64 {
    let k = actions as f64;
    let t = t as f64;
    let c = (2.0 * (2.0 / delta2).ln()).sqrt();
    2.0 * c * (k * t).sqrt() + 4.0 * (t * (1.0 / delta2).ln()).sqrt() + 2.0 * k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub name: String,
    pub bound_value: f64,
    pub observed: f64,
    pub holds: bool,
    /// `bound_value − observed`.
    pub margin: f64,
}

impl BoundVerdict {
    pub fn new(name: impl Into<String>, bound_value: f64, observed: f64) -> Self {
        Self {
            name: name.into(),
            bound_value,
            observed,
            holds: observed <= bound_value,
            margin: bound_value - observed,
        }
    }
}
