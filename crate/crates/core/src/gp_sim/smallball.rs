use serde::Serialize;

use super::model::{CovarianceModel, Structure};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Maximum number of base lags `x` scanned.
const MAX_LAGS: usize = 64;
/// Largest `j` examined per lag.
const MAX_J: usize = 400;

/// Sufficient conditions for the exponential small-ball upper bound of a
/// process whose incremental variance depends on the lag only.
#[derive(Debug, Clone, Serialize)]
pub struct SmallBallConditionReport {
    /// `sup_x W(2x)/W(x)` over the lattice with `x ≤ 1/2`.
    pub doubling_ratio: f64,
    pub doubling_pass: bool,
    /// Smallest normalized margin of the fourth-difference inequality.
    pub min_margin: f64,
    /// `(x, j)` where the smallest margin occurs.
    pub worst_pair: (f64, usize),
    pub pairs_checked: usize,
    pub inequality_pass: bool,
    pub pass: bool,
}

/// Scan `w` on the unit-interval lattice `x = k/cells`.
///
/// Checks `W(2x) ≤ θ W(x)` with some `θ < 4`, and
/// `6W(jx) + W((j+2)x) + W((j−2)x) ≥ 4W((j+1)x) + 4W((j−1)x)` for
/// `2 ≤ j ≤ 1/x − 2`.
pub fn check_lag_variance(w: impl Fn(f64) -> f64, cells: usize) -> SmallBallConditionReport {
    let cells = cells.max(8);
    let stride = (cells / 2 / MAX_LAGS).max(1);
    let xs: Vec<f64> = (1..=cells / 2).step_by(stride).map(|k| k as f64 / cells as f64).collect();

    let mut doubling_ratio: f64 = 0.0;
    for &x in &xs {
        let wx = w(x);
        if wx > 0.0 {
            doubling_ratio = doubling_ratio.max(w(2.0 * x) / wx);
        } else {
            doubling_ratio = f64::INFINITY;
        }
    }

    let mut min_margin = f64::INFINITY;
    let mut worst_pair = (f64::NAN, 0);
    let mut pairs = 0;
    for &x in &xs {
        let jmax = ((1.0 / x).floor() as usize).saturating_sub(2).min(MAX_J);
        for j in 2..=jmax {
            let jf = j as f64;
            let lhs = 6.0 * w(jf * x) + w((jf + 2.0) * x) + w((jf - 2.0) * x);
            let rhs = 4.0 * w((jf + 1.0) * x) + 4.0 * w((jf - 1.0) * x);
            let scale = lhs.abs() + rhs.abs();
            let margin = if scale > 0.0 { (lhs - rhs) / scale } else { 0.0 };
            pairs += 1;
            if margin < min_margin {
                min_margin = margin;
                worst_pair = (x, j);
            }
        }
    }
    let doubling_pass = doubling_ratio > 0.0 && doubling_ratio < 4.0;
    // equality (linear W) must pass despite rounding
    let inequality_pass = pairs > 0 && min_margin >= -1e-10;
    SmallBallConditionReport {
        doubling_ratio,
        doubling_pass,
        min_margin,
        worst_pair,
        pairs_checked: pairs,
        inequality_pass,
        pass: doubling_pass && inequality_pass,
    }
}

/// Runs [`check_lag_variance`] on the model's lag variance, with lags
/// measured in units of the grid horizon (the local window `Δ`).
pub fn check_smallball_conditions(model: &CovarianceModel, grid: &TimeGrid) -> Result<SmallBallConditionReport> {
    if model.structure() == Structure::General {
        return Err(Error::Unsupported(
            "small-ball conditions need stationary or stationary-increment covariance".into(),
        ));
    }
    let w = model.lag_variance_fn().ok_or_else(|| Error::Unsupported("model has no lag variance".into()))?;
    let window = grid.horizon() - grid.start();
    Ok(check_lag_variance(|x| w(x * window), grid.intervals()))
}
