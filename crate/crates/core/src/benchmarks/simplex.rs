//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Solves `max ⟨c, x⟩` subject to `A x ≤ b`, `E x = d`, `x ≥ 0`. Problem
//! sizes here are tiny (a few dozen columns), so a full tableau is fine.

use crate::error::{check_dim, Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    /// Objective coefficients (maximized).
    pub objective: Vec<f64>,
    pub ineq_matrix: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    /// Adds `⟨row, x⟩ ≤ rhs`.
    pub fn leq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ineq_matrix.push(row);
        self.ineq_rhs.push(rhs);
        self
    }

    /// Adds `⟨row, x⟩ = rhs`.
    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    /// Adds the simplex constraint `Σ x = 1` over all variables.
    pub fn on_simplex(self) -> Self {
        let n = self.objective.len();
        self.eq(vec![1.0; n], 1.0)
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                field: "objective",
                reason: "LP needs at least one variable".into(),
            });
        }
        check_dim(self.ineq_matrix.len(), self.ineq_rhs.len())?;
        check_dim(self.eq_matrix.len(), self.eq_rhs.len())?;
        for row in self.ineq_matrix.iter().chain(&self.eq_matrix) {
            check_dim(n, row.len())?;
        }
        let finite = self
            .objective
            .iter()
            .chain(self.ineq_matrix.iter().flatten())
            .chain(self.eq_matrix.iter().flatten())
            .chain(&self.ineq_rhs)
            .chain(&self.eq_rhs)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Numeric("LP contains non-finite entries".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub value: f64,
    /// `c_j − z_j` for every structural column at the final basis. All
    /// entries are `≤ tol` at an optimum.
    pub reduced_costs: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// `z_j − c_j` for the current objective.
    cost_row: Vec<f64>,
    columns: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = other[col];
            if f != 0.0 {
                for (v, pv) in other.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                other[col] = 0.0;
                self.rhs[r] -= f * pivot_rhs;
            }
        }
        let f = self.cost_row[col];
        if f != 0.0 {
            for (v, pv) in self.cost_row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost_row[col] = 0.0;
        }
        self.basis[row] = col;
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let mut row: Vec<f64> = costs.iter().map(|c| -c).collect();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (v, a) in row.iter_mut().zip(&self.rows[r]) {
                    *v += cb * a;
                }
            }
        }
        self.cost_row = row;
    }

    /// Runs Bland-rule pivots over the allowed columns. Returns `false` when
    /// the objective is unbounded.
    fn optimize(&mut self, allowed: usize, tol: f64, pivots: &mut usize) -> Result<bool> {
        loop {
            let entering = (0..allowed).find(|&j| self.cost_row[j] < -tol);
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[r] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14
                                || (ratio <= lratio + 1e-14 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::Numeric("simplex pivot limit exceeded".into()));
            }
        }
    }
}

/// Solves the LP. `tol` governs feasibility and optimality decisions.
pub fn lp_solve(problem: &LpProblem, tol: f64) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.objective.len();
    let p = problem.ineq_matrix.len();
    let q = problem.eq_matrix.len();

    // Column layout: [structural n | slack p | artificial ...].
    let mut rows = Vec::with_capacity(p + q);
    let mut rhs = Vec::with_capacity(p + q);
    let mut needs_artificial = Vec::with_capacity(p + q);
    for (i, (row, &b)) in problem.ineq_matrix.iter().zip(&problem.ineq_rhs).enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = row.iter().map(|v| sign * v).collect();
        r.resize(n + p, 0.0);
        r[n + i] = sign;
        rows.push(r);
        rhs.push(sign * b);
        needs_artificial.push(sign < 0.0);
    }
    for (row, &b) in problem.eq_matrix.iter().zip(&problem.eq_rhs) {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = row.iter().map(|v| sign * v).collect();
        r.resize(n + p, 0.0);
        rows.push(r);
        rhs.push(sign * b);
        needs_artificial.push(true);
    }
    let artificial_count = needs_artificial.iter().filter(|a| **a).count();
    let columns = n + p + artificial_count;
    let mut basis = Vec::with_capacity(rows.len());
    let mut next_art = n + p;
    for (r, row) in rows.iter_mut().enumerate() {
        row.resize(columns, 0.0);
        if needs_artificial[r] {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + r);
        }
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        cost_row: vec![0.0; columns],
        columns,
    };
    let mut pivots = 0;

    if artificial_count > 0 {
        let mut phase1 = vec![0.0; columns];
        phase1[n + p..].iter_mut().for_each(|c| *c = -1.0);
        tab.set_objective(&phase1);
        tab.optimize(columns, tol, &mut pivots)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(b, _)| **b >= n + p)
            .map(|(_, v)| *v)
            .sum();
        if infeasibility > tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                value: f64::NAN,
                reduced_costs: vec![f64::NAN; n],
            });
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= n + p {
                let col = (0..n + p).find(|&j| tab.rows[r][j].abs() > 1e-9);
                match col {
                    Some(col) => {
                        tab.pivot(r, col);
                        r += 1;
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.rhs.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut costs = vec![0.0; tab.columns];
    costs[..n].copy_from_slice(&problem.objective);
    tab.set_objective(&costs);
    let bounded = tab.optimize(n + p, tol, &mut pivots)?;

    let mut x = vec![0.0; n];
    for (&b, &v) in tab.basis.iter().zip(&tab.rhs) {
        if b < n {
            x[b] = v.max(0.0);
        }
    }
    let reduced_costs = tab.cost_row[..n].iter().map(|d| -d).collect();
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            value: f64::INFINITY,
            reduced_costs,
        });
    }
    let value = crate::types::dot(&problem.objective, &x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
        reduced_costs,
    })
}
