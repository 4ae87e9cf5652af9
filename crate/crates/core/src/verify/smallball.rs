use rayon::prelude::*;
use serde::Serialize;

use super::{linear_fit, z_value, EstimateWithCI, LinearFit};
use crate::error::{Error, Result};
use crate::gp_sim::{CovarianceModel, PathSampler};
use crate::grid::TimeGrid;
use crate::rng;

/// Sweep points with fewer successes are left out of the shape fit.
pub const SHAPE_MIN_SUCCESSES: usize = 5;
const CONFIDENCE: f64 = 0.95;

/// `sup_{s ≤ u ≤ t} |X_u − X_s|` on a uniform grid of `cells` cells, one per path.
fn grid_sups(model: &CovarianceModel, s: f64, t: f64, count: usize, seed: u64, cells: usize) -> Result<Vec<f64>> {
    if !(s >= 0.0 && s < t && t <= model.horizon()) {
        return Err(Error::Invalid(format!("need 0 ≤ s < t ≤ T (got s = {s}, t = {t})")));
    }
    if count == 0 {
        return Err(Error::Invalid("path count must be positive".into()));
    }
    let grid = TimeGrid::uniform_on(s, t, cells)?.shared();
    let sampler = PathSampler::new(model, grid)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| {
            let p = sampler.sample(seed, i);
            let x0 = p.values[0];
            p.values.iter().fold(0.0, |m: f64, v| m.max((v - x0).abs()))
        })
        .collect())
}

/// Fraction of paths staying within `ε` of `X_s` on `[s, t]`.
pub fn smallball_estimate(
    model: &CovarianceModel,
    s: f64,
    t: f64,
    eps: f64,
    count: usize,
    seed: u64,
    cells: usize,
) -> Result<EstimateWithCI> {
    Ok(smallball_sweep(model, s, t, &[eps], count, seed, cells)?[0])
}

/// [`smallball_estimate`] for several radii on one set of paths, so the
/// estimates are monotone in `ε` exactly.
pub fn smallball_sweep(
    model: &CovarianceModel,
    s: f64,
    t: f64,
    eps: &[f64],
    count: usize,
    seed: u64,
    cells: usize,
) -> Result<Vec<EstimateWithCI>> {
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Invalid("radii must be positive".into()));
    }
    let sups = grid_sups(model, s, t, count, seed, cells)?;
    Ok(eps
        .iter()
        .map(|&e| EstimateWithCI::proportion(sups.iter().filter(|&&m| m <= e).count(), count, CONFIDENCE))
        .collect())
}

/// Fit of `log P` against `ε^{−1/α}`.
#[derive(Debug, Clone, Serialize)]
pub struct SmallBallShape {
    pub fit: LinearFit,
    /// Radii that entered the fit.
    pub used: Vec<f64>,
    /// `min_i (−log p_i)/(Δ ε_i^{−1/α})`: largest `C` with every estimate below `exp(−CΔε^{−1/α})`.
    pub upper_constant: f64,
    /// `max_i (−log p_i)/(Δ ε_i^{−1/α})`: smallest `K` with every estimate above `exp(−KΔε^{−1/α})`.
    pub lower_constant: f64,
}

pub fn smallball_shape(eps: &[f64], est: &[EstimateWithCI], alpha: f64, delta: f64) -> Option<SmallBallShape> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut used = Vec::new();
    let mut ratios = Vec::new();
    for (&e, r) in eps.iter().zip(est) {
        let k = (r.estimate * r.count as f64).round() as usize;
        if k < SHAPE_MIN_SUCCESSES {
            continue;
        }
        let u = e.powf(-1.0 / alpha);
        x.push(u);
        y.push(r.estimate.ln());
        used.push(e);
        ratios.push(-r.estimate.ln() / (delta * u));
    }
    let fit = linear_fit(&x, &y)?;
    Some(SmallBallShape {
        fit,
        used,
        upper_constant: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        lower_constant: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeCheck {
    pub coarse: SmallBallShape,
    pub fine: SmallBallShape,
    pub coarse_estimates: Vec<EstimateWithCI>,
    pub fine_estimates: Vec<EstimateWithCI>,
    /// Both slopes negative with `|t| > 3`.
    pub decaying: bool,
    /// The two slopes agree within their 95% intervals.
    pub stable: bool,
}

/// Shape fit on `[s, s + Δ]` at `cells` and again at half the grid step.
pub fn smallball_shape_check(
    model: &CovarianceModel,
    s: f64,
    delta: f64,
    eps: &[f64],
    count: usize,
    seed: u64,
    cells: usize,
) -> Result<ShapeCheck> {
    let alpha = model.alpha();
    let fit_at = |c: usize, tag: u64| -> Result<(SmallBallShape, Vec<EstimateWithCI>)> {
        let est = smallball_sweep(model, s, s + delta, eps, count, rng::derive(seed, tag), c)?;
        let shape = smallball_shape(eps, &est, alpha, delta)
            .ok_or_else(|| Error::Numerical("fewer than three radii with enough successes".into()))?;
        Ok((shape, est))
    };
    let (coarse, coarse_estimates) = fit_at(cells, 0)?;
    let (fine, fine_estimates) = fit_at(2 * cells, 1)?;
    let ok = |f: &LinearFit| f.slope < 0.0 && f.t_stat().abs() > 3.0;
    let decaying = ok(&coarse.fit) && ok(&fine.fit);
    let spread = z_value(CONFIDENCE) * (coarse.fit.slope_se.powi(2) + fine.fit.slope_se.powi(2)).sqrt();
    let stable = (coarse.fit.slope - fine.fit.slope).abs() <= spread;
    Ok(ShapeCheck { coarse, fine, coarse_estimates, fine_estimates, decaying, stable })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_ball_is_certain() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let w = 0.1f64.powf(1.5);
        let e = smallball_estimate(&m, 0.9, 1.0, 10.0 * w.sqrt(), 2000, 1, 64).unwrap();
        assert!(e.contains(1.0));
    }

    #[test]
    fn monotone_in_radius() {
        let m = CovarianceModel::stationary_exp(0.75, 1.0).unwrap();
        let eps = [0.05, 0.1, 0.2, 0.4];
        let est = smallball_sweep(&m, 0.9, 1.0, &eps, 2000, 2, 64).unwrap();
        assert!(est.windows(2).all(|w| w[0].estimate <= w[1].estimate));
        assert!(est.iter().all(|e| e.contains(e.estimate)));
    }

    #[test]
    fn zero_successes_give_one_sided_interval() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let e = smallball_estimate(&m, 0.0, 1.0, 1e-4, 500, 3, 64).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert!(e.upper > 0.0);
    }
}
