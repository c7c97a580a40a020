//! Domain types shared by every stage of the simulation: experiment
//! parameters, strategies on the probability simplex, per-round reward and
//! cost samples, and estimated feasible sets.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};

/// Absolute tolerance used for every simplex-sum check.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Global experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Number of rounds `T`.
    pub horizon: usize,
    /// Number of actions `K`.
    pub actions: usize,
    /// Number of long-term constraints `m`.
    pub constraints: usize,
    /// Global failure probability `ε ∈ (0, 1)`.
    pub epsilon: f64,
    pub seed: u64,
}

/// Confidence levels split out of the global failure probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceParams {
    /// Confidence of the regret minimizer.
    pub delta1: f64,
    /// Per-event confidence of the constraint estimator.
    pub delta2: f64,
}

impl ExperimentParams {
    pub fn new(
        horizon: usize,
        actions: usize,
        constraints: usize,
        epsilon: f64,
        seed: u64,
    ) -> Result<Self> {
        let params = Self {
            horizon,
            actions,
            constraints,
            epsilon,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if self.actions == 0 {
            return Err(invalid("actions", "must be at least 1"));
        }
        if self.constraints == 0 {
            return Err(invalid("constraints", "must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(
                "epsilon",
                format!("must lie in (0, 1), got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    /// Returns the same parameters with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self { horizon, ..*self }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// `δ1 = ε/2` and `δ2 = ε/(14·m·K·T²)`.
pub fn derive_confidence_params(params: &ExperimentParams) -> ConfidenceParams {
    let t = params.horizon as f64;
    let denom = 14.0 * params.constraints as f64 * params.actions as f64 * t * t;
    ConfidenceParams {
        delta1: params.epsilon / 2.0,
        delta2: params.epsilon / denom,
    }
}

/// A randomized strategy: a point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Strategy(Vec<f64>);

impl Strategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("probs", "strategy must have at least one entry"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(invalid("probs", format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid("probs", format!("entries sum to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(actions: usize) -> Self {
        Self(vec![1.0 / actions as f64; actions])
    }

    /// Unit vector on `action`.
    pub fn vertex(actions: usize, action: usize) -> Result<Self> {
        if action >= actions {
            return Err(Error::OutOfRange {
                index: action,
                limit: actions,
            });
        }
        let mut probs = vec![0.0; actions];
        probs[action] = 1.0;
        Ok(Self(probs))
    }

    /// Normalizes a nonnegative vector with positive sum.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Numeric(format!(
                "cannot normalize weights with sum {sum}"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self(weights))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.0[action]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Strategy {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Strategy> for Vec<f64> {
    fn from(value: Strategy) -> Self {
        value.0
    }
}

/// Per-round costs `g_t^{(i)}(a)`, an `m × K` matrix with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub costs: Vec<Vec<f64>>,
}

impl CostSample {
    pub fn new(costs: Vec<Vec<f64>>) -> Result<Self> {
        let width = costs.first().map_or(0, Vec::len);
        for row in &costs {
            check_dim(width, row.len())?;
            if let Some(c) = row.iter().find(|c| !(-1.0..=1.0).contains(*c)) {
                return Err(invalid("costs", format!("cost {c} outside [-1, 1]")));
            }
        }
        Ok(Self { costs })
    }

    /// Costs of every constraint at one action.
    pub fn column(&self, action: usize) -> Vec<f64> {
        self.costs.iter().map(|row| row[action]).collect()
    }
}

/// Per-round rewards `f_t(a)` with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    pub rewards: Vec<f64>,
}

impl RewardSample {
    pub fn new(rewards: Vec<f64>) -> Result<Self> {
        if let Some(r) = rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(invalid("rewards", format!("reward {r} outside [0, 1]")));
        }
        Ok(Self { rewards })
    }
}

/// Intersection of the simplex with `m` halfspaces `⟨x, c_i⟩ ≤ 0`, where
/// `c_i = ĝ^{(i)} − b` is the optimistic cost estimate of constraint `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    pub constraint_vectors: Vec<Vec<f64>>,
}

impl FeasibleSet {
    pub fn new(constraint_vectors: Vec<Vec<f64>>) -> Result<Self> {
        if constraint_vectors.is_empty() {
            return Err(invalid("constraint_vectors", "need at least one constraint"));
        }
        let width = constraint_vectors[0].len();
        if width == 0 {
            return Err(invalid("constraint_vectors", "need at least one action"));
        }
        for row in &constraint_vectors {
            check_dim(width, row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(invalid("constraint_vectors", "non-finite entry"));
            }
        }
        Ok(Self { constraint_vectors })
    }

    /// Skips validation for vectors built internally from checked state.
    pub(crate) fn from_raw(constraint_vectors: Vec<Vec<f64>>) -> Self {
        Self { constraint_vectors }
    }

    pub fn actions(&self) -> usize {
        self.constraint_vectors[0].len()
    }

    pub fn constraints(&self) -> usize {
        self.constraint_vectors.len()
    }

    /// Inner products `⟨x, c_i⟩` for every constraint.
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.actions(), x.len())?;
        Ok(self.constraint_vectors.iter().map(|c| dot(c, x)).collect())
    }

    pub fn max_residual(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .residuals(x)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// True iff every inner product `⟨x, c_i⟩` is at most `tol`.
    pub fn membership(&self, x: &Strategy, tol: f64) -> Result<bool> {
        Ok(self.residuals(x.probs())?.into_iter().all(|r| r <= tol))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-entropy Bregman divergence
/// `B(x‖y) = Σ x(a) log(x(a)/y(a)) − x(a) + y(a)` with `0 log 0 = 0`.
pub fn bregman_divergence(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xa, &ya)| {
            let entropy = if xa > 0.0 { xa * (xa / ya).ln() } else { 0.0 };
            entropy - xa + ya
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confidence_params_examples() {
        let p = ExperimentParams::new(10, 2, 1, 0.1, 0).unwrap();
        let c = derive_confidence_params(&p);
        assert!((c.delta1 - 0.05).abs() < 1e-15);
        assert!((c.delta2 - 0.1 / 2800.0).abs() < 1e-18);

        let p = ExperimentParams::new(1, 1, 1, 0.14, 0).unwrap();
        let c = derive_confidence_params(&p);
        assert!((c.delta1 - 0.07).abs() < 1e-15);
        assert!((c.delta2 - 0.01).abs() < 1e-15);

        // 0.05 / (14·3·5·10⁶) = 0.05 / 2.1e8, exact rational 1/4.2e9.
        let p = ExperimentParams::new(1000, 5, 3, 0.05, 0).unwrap();
        let c = derive_confidence_params(&p);
        let expected = 2.380_952_380_952_381e-10;
        assert!((c.delta2 - expected).abs() / expected < 1e-14);
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(ExperimentParams::new(0, 2, 1, 0.1, 0).is_err());
        assert!(ExperimentParams::new(1, 0, 1, 0.1, 0).is_err());
        assert!(ExperimentParams::new(1, 2, 0, 0.1, 0).is_err());
        assert!(ExperimentParams::new(1, 2, 1, 1.5, 0).is_err());
        assert!(ExperimentParams::new(1, 2, 1, 0.0, 0).is_err());
    }

    #[test]
    fn delta2_strictly_decreases_in_dimensions() {
        let base = ExperimentParams::new(50, 3, 2, 0.1, 0).unwrap();
        let d = derive_confidence_params(&base).delta2;
        for p in [
            ExperimentParams { horizon: 51, ..base },
            ExperimentParams { actions: 4, ..base },
            ExperimentParams { constraints: 3, ..base },
        ] {
            assert!(derive_confidence_params(&p).delta2 < d);
        }
    }

    #[test]
    fn strategy_validation() {
        assert!(Strategy::new(vec![0.5, 0.5]).is_ok());
        assert!(Strategy::new(vec![0.5, 0.6]).is_err());
        assert!(Strategy::new(vec![-0.1, 1.1]).is_err());
        assert!(Strategy::new(vec![]).is_err());
        assert_eq!(Strategy::vertex(3, 1).unwrap().probs(), &[0.0, 1.0, 0.0]);
        assert!(Strategy::vertex(3, 3).is_err());
    }

    #[test]
    fn membership_examples() {
        let x = Strategy::new(vec![0.6, 0.2, 0.2]).unwrap();
        let zero = FeasibleSet::new(vec![vec![0.0; 3]]).unwrap();
        assert!(zero.membership(&x, SIMPLEX_TOL).unwrap());

        let ones = FeasibleSet::new(vec![vec![1.0; 3]]).unwrap();
        assert!(!ones.membership(&x, SIMPLEX_TOL).unwrap());

        let set = FeasibleSet::new(vec![vec![-1.0, 0.5, 0.5]]).unwrap();
        assert!((set.residuals(x.probs()).unwrap()[0] + 0.4).abs() < 1e-15);
        assert!(set.membership(&x, SIMPLEX_TOL).unwrap());

        let y = Strategy::uniform(2);
        assert!(matches!(
            set.membership(&y, SIMPLEX_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn membership_monotone_in_tol() {
        let set = FeasibleSet::new(vec![vec![0.3, -0.1], vec![0.2, 0.05]]).unwrap();
        for k in 0..=20 {
            let p = k as f64 / 20.0;
            let x = Strategy::new(vec![p, 1.0 - p]).unwrap();
            let mut seen = false;
            for tol in [-0.1, 0.0, 1e-9, 0.01, 0.1, 0.3] {
                let inside = set.membership(&x, tol).unwrap();
                assert!(!seen || inside);
                seen |= inside;
            }
        }
    }

    #[test]
    fn divergence_is_zero_on_diagonal() {
        let x = [0.2, 0.3, 0.5];
        assert!(bregman_divergence(&x, &x).abs() < 1e-15);
        assert!(bregman_divergence(&[1.0, 0.0], &[0.5, 0.5]) > 0.0);
    }
}
