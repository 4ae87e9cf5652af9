use serde::Serialize;

use super::model::CovarianceModel;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Number of shifts `u ∈ [T−δ, T)` examined.
const SHIFTS: usize = 8;
/// The ratio supremum of condition (4) counts as finite below this value.
const RATIO_FINITE_LIMIT: f64 = 1e6;
/// Allowed shortfall of the fitted exponent of `w*_Y(t)` below `2α`.
const EXPONENT_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub struct ClassOptions {
    /// Width `δ` of the window `[T−δ, T)` of shifts.
    pub delta: f64,
    /// Small-time range `δ̂` of conditions (3) and (4).
    pub delta_hat: f64,
}

impl ClassOptions {
    pub fn defaults(horizon: f64) -> Self {
        Self { delta: horizon / 2.0, delta_hat: horizon / 4.0 }
    }
}

/// Outcome of the four covariance conditions for the shifted increment
/// processes `Y_t = X_{t+u} − X_u`.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub alpha: f64,
    pub delta: f64,
    pub delta_hat: f64,
    pub shift_window: (f64, f64),
    pub shifts: Vec<f64>,
    pub grid_intervals: usize,
    /// (1) `R_Y(s,t) > 0`; smallest value seen.
    pub positive_covariance: bool,
    pub min_covariance: f64,
    /// (2) `w*_Y(t) ≤ C t^{2α}`; fitted log–log exponent and the constant.
    pub worst_case_bound: bool,
    pub fitted_exponent: f64,
    pub constant_c_upper: f64,
    /// (3) `V_Y(s) ≥ c s²` on `s ≤ δ̂`.
    pub variance_lower_bound: bool,
    pub constant_c_lower: f64,
    /// (4) `sup R_Y(s,s)/R_Y(t,s)` over `t < 2δ̂, t/2 ≤ s ≤ t`.
    pub ratio_bounded: bool,
    pub ratio_sup: f64,
    pub pass: bool,
}

pub fn check_class_membership(model: &CovarianceModel, alpha: f64, delta: f64, grid: &TimeGrid) -> Result<ClassReport> {
    let mut opts = ClassOptions::defaults(grid.horizon());
    opts.delta = delta;
    check_class_membership_with(model, alpha, grid, opts)
}

/// Least-squares slope and intercept.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn check_class_membership_with(
    model: &CovarianceModel,
    alpha: f64,
    grid: &TimeGrid,
    opts: ClassOptions,
) -> Result<ClassReport> {
    let horizon = grid.horizon();
    let ClassOptions { delta, delta_hat } = opts;
    if !(delta > 0.0 && delta < horizon) {
        return Err(Error::Window(format!("0 < δ < T (got δ = {delta}, T = {horizon})")));
    }
    if !(delta_hat > 0.0 && delta_hat <= horizon) {
        return Err(Error::Window(format!("0 < δ̂ ≤ T (got {delta_hat})")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Window(format!("0 < α < 1 (got {alpha})")));
    }
    if !grid.is_uniform() {
        return Err(Error::Grid("class checks need a uniform grid".into()));
    }
    let h = grid.step();
    let n = grid.intervals();
    let first = ((horizon - delta) / h).ceil() as usize;
    let last = n - 1;
    if last + 1 < first + SHIFTS {
        return Err(Error::Grid(format!(
            "[T−δ, T) holds {} grid points, need at least {SHIFTS}",
            (last + 1).saturating_sub(first)
        )));
    }
    let mut shift_idx: Vec<usize> = (0..SHIFTS)
        .map(|j| {
            let x = first as f64 + j as f64 * (last - first) as f64 / (SHIFTS - 1) as f64;
            x.round() as usize
        })
        .collect();
    shift_idx.dedup();

    let t = grid.points();
    let cov = |a: usize, b: usize| model.cov(t[a], t[b]);

    let mut min_cov = f64::INFINITY;
    let mut min_exponent = f64::INFINITY;
    let mut c_upper: f64 = 0.0;
    let mut c_lower = f64::INFINITY;
    let mut ratio_sup: f64 = 0.0;
    let mut ratio_ok = true;

    let hat_steps = ((delta_hat / h).floor() as usize).max(1);
    for &iu in &shift_idx {
        let m = n - iu;
        // R_Y(j, k) on lags 0..=m
        let ru: Vec<f64> = (0..=m).map(|k| cov(iu + k, iu)).collect();
        let r_uu = ru[0];
        let ry = |j: usize, k: usize| cov(iu + j, iu + k) - ru[j] - ru[k] + r_uu;

        // (1)
        for j in 1..=m {
            for k in 1..=j {
                min_cov = min_cov.min(ry(j, k));
            }
        }

        // (2) w*_Y(k) = max_s W_Y(s+k, s)
        let wstar =
            |k: usize| -> f64 { (0..=m - k).map(|s| model.incr_var(t[iu + s + k], t[iu + s])).fold(0.0, f64::max) };
        for k in 1..=m {
            let tk = k as f64 * h;
            c_upper = c_upper.max(wstar(k) / tk.powf(2.0 * alpha));
        }
        let max_fit_lag = m.min(hat_steps);
        let lags: Vec<usize> =
            std::iter::successors(Some(1usize), |k| Some(k * 2)).take_while(|&k| k <= max_fit_lag).collect();
        if lags.len() >= 3 {
            let lx: Vec<f64> = lags.iter().map(|&k| (k as f64 * h).ln()).collect();
            let ly: Vec<f64> = lags.iter().map(|&k| wstar(k).max(f64::MIN_POSITIVE).ln()).collect();
            min_exponent = min_exponent.min(ols(&lx, &ly).0);
        } else if shift_idx[0] == iu {
            return Err(Error::Grid("fewer than 3 dyadic lags below δ̂; refine the grid".into()));
        }

        // (3)
        for k in 1..=m.min(hat_steps) {
            let s = k as f64 * h;
            c_lower = c_lower.min(model.incr_var(t[iu + k], t[iu]) / (s * s));
        }

        // (4)
        let two_hat = 2.0 * delta_hat;
        for j in 1..=m {
            if j as f64 * h >= two_hat {
                break;
            }
            let lo = j.div_ceil(2);
            for k in lo.max(1)..=j {
                let den = ry(j, k);
                if den <= 0.0 {
                    ratio_ok = false;
                    ratio_sup = f64::INFINITY;
                    continue;
                }
                ratio_sup = ratio_sup.max(ry(k, k) / den);
            }
        }
    }

    let positive_covariance = min_cov > 0.0;
    let worst_case_bound = min_exponent.is_finite() && min_exponent >= 2.0 * alpha - EXPONENT_SLACK;
    let variance_lower_bound = c_lower.is_finite() && c_lower > 1e-12;
    let ratio_bounded = ratio_ok && ratio_sup <= RATIO_FINITE_LIMIT;
    Ok(ClassReport {
        alpha,
        delta,
        delta_hat,
        shift_window: (horizon - delta, horizon),
        shifts: shift_idx.iter().map(|&i| t[i]).collect(),
        grid_intervals: n,
        positive_covariance,
        min_covariance: min_cov,
        worst_case_bound,
        fitted_exponent: min_exponent,
        constant_c_upper: c_upper,
        variance_lower_bound,
        constant_c_lower: c_lower,
        ratio_bounded,
        ratio_sup,
        pass: positive_covariance && worst_case_bound && variance_lower_bound && ratio_bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::uniform(1.0, 128).unwrap()
    }

    #[test]
    fn fbm_three_quarters_is_in_class() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let r = check_class_membership(&m, 0.75, 0.5, &grid()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.fitted_exponent - 1.5).abs() < 1e-9);
        assert_eq!(r.shifts.len(), 8);
    }

    #[test]
    fn brownian_motion_fails_worst_case_bound() {
        let m = CovarianceModel::fbm(0.5, 1.0).unwrap();
        let r = check_class_membership(&m, 0.75, 0.5, &grid()).unwrap();
        assert!(!r.worst_case_bound);
        assert!((r.fitted_exponent - 1.0).abs() < 1e-6);
        assert!(r.positive_covariance && r.variance_lower_bound && r.ratio_bounded);
        assert!(!r.pass);
    }

    #[test]
    fn stationary_exp_is_in_class() {
        let m = CovarianceModel::stationary_exp(0.75, 1.0).unwrap();
        let r = check_class_membership(&m, 0.75, 0.5, &grid()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn bad_inputs() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        assert!(check_class_membership(&m, 0.75, 1.5, &grid()).unwrap_err().is_window());
        let coarse = TimeGrid::uniform(1.0, 8).unwrap();
        assert!(matches!(check_class_membership(&m, 0.75, 0.5, &coarse), Err(Error::Grid(_))));
    }
}
