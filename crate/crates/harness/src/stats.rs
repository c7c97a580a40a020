//! Summary statistics over repetitions.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SlopeError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("horizon and value lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("value {value} at horizon {horizon} is not positive")]
    NonPositive { horizon: usize, value: f64 },
    #[error("horizons must be distinct")]
    DegenerateHorizons,
}

/// Least-squares slope of `log(value)` against `log(T)`.
pub fn scaling_slope(horizons: &[usize], values: &[f64]) -> Result<f64, SlopeError> {
    if horizons.len() != values.len() {
        return Err(SlopeError::LengthMismatch(horizons.len(), values.len()));
    }
    if horizons.len() < 3 {
        return Err(SlopeError::TooFewPoints(horizons.len()));
    }
    for (&horizon, &value) in horizons.iter().zip(values) {
        if !(value > 0.0) || horizon == 0 {
            return Err(SlopeError::NonPositive { horizon, value });
        }
    }
    let xs: Vec<f64> = horizons.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SlopeError::DegenerateHorizons);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Median with the midpoint convention for even lengths; `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub stddev: f64,
    pub median: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stddev,
            median: median(values),
        }
    }
}
