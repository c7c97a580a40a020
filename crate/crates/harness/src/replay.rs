//! Recomputes trace-level metrics from a per-run CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub rounds: usize,
    pub constraints: usize,
    pub total_reward: f64,
    /// Per-constraint violations summed from the cost columns.
    pub violations: Vec<f64>,
    /// `V_T` recomputed from the cost columns.
    pub final_violation: f64,
    /// Largest gap between recomputed and logged cumulative columns.
    pub max_discrepancy: f64,
    /// Regret at the last logged checkpoint.
    pub final_regret: Option<f64>,
    pub checkpoints: usize,
    pub fallback_rounds: usize,
    pub action_counts: Vec<usize>,
}

pub fn replay(path: impl AsRef<Path>) -> Result<ReplayReport, HarnessError> {
    let path = path.as_ref();
    let bad = |m: String| HarnessError::format(path, m);
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let m = header.iter().filter(|h| h.starts_with("cost_")).count();
    let expected = crate::run::csv_header(m);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad(format!("unexpected header {header:?}")));
    }

    let mut report = ReplayReport {
        rounds: 0,
        constraints: m,
        total_reward: 0.0,
        violations: vec![0.0; m],
        final_violation: 0.0,
        max_discrepancy: 0.0,
        final_regret: None,
        checkpoints: 0,
        fallback_rounds: 0,
        action_counts: Vec::new(),
    };
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let float = |i: usize| -> Result<f64, HarnessError> {
            row[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: column {}: {e}", line + 1, &header[i])))
        };
        let int = |i: usize| -> Result<usize, HarnessError> {
            row[i]
                .parse::<usize>()
                .map_err(|e| bad(format!("row {}: column {}: {e}", line + 1, &header[i])))
        };
        let t = int(0)?;
        if t != line + 1 {
            return Err(bad(format!("row {} has t = {t}", line + 1)));
        }
        let action = int(1)?;
        if report.action_counts.len() <= action {
            report.action_counts.resize(action + 1, 0);
        }
        report.action_counts[action] += 1;
        report.total_reward += float(2)?;
        let mut vt = f64::NEG_INFINITY;
        for i in 0..m {
            report.violations[i] += float(3 + i)?;
            let logged = float(3 + m + i)?;
            report.max_discrepancy = report.max_discrepancy.max((logged - report.violations[i]).abs());
            vt = vt.max(report.violations[i]);
        }
        let logged_vt = float(3 + 2 * m)?;
        report.max_discrepancy = report.max_discrepancy.max((logged_vt - vt).abs());
        report.final_violation = vt;
        if !row[4 + 2 * m].is_empty() {
            report.final_regret = Some(float(4 + 2 * m)?);
            report.checkpoints += 1;
        }
        if int(5 + 2 * m)? != 0 {
            report.fallback_rounds += 1;
        }
        report.rounds = t;
    }
    Ok(report)
}
