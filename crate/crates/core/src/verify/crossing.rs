use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::EstimateWithCI;
use crate::error::{Error, Result};
use crate::gp_sim::CovarianceModel;
use crate::rng;

/// Normal quantile of the sign-symmetry check (two-sided 99.9%).
pub const SYMMETRY_Z: f64 = 3.29;
const CONFIDENCE: f64 = 0.95;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub s: f64,
    pub t: f64,
    /// `P(X_s < 0 < X_t)`.
    pub empirical: EstimateWithCI,
    /// `P(X_s > 0 > X_t)`.
    pub reverse: EstimateWithCI,
    /// `√(W(t,s)/V(s)) [1 + R(s,s)/R(t,s)]`.
    pub bound: f64,
    /// `empirical / bound`, when the bound is positive.
    pub implied_c: Option<f64>,
    /// The two crossing directions agree within `SYMMETRY_Z` standard errors.
    pub symmetric: bool,
}

/// Sign-crossing frequency from exact draws of `(X_s, X_t)`.
pub fn crossing_check(model: &CovarianceModel, s: f64, t: f64, count: usize, seed: u64) -> Result<CrossingReport> {
    if !(s > 0.0 && s <= t && t <= model.horizon()) {
        return Err(Error::Invalid(format!("need 0 < s ≤ t ≤ T (got s = {s}, t = {t})")));
    }
    if count == 0 {
        return Err(Error::Invalid("sample count must be positive".into()));
    }
    let vs = model.variance(s)?;
    let vt = model.variance(t)?;
    let r = model.covariance(t, s)?;
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("R(t, s) = {r} must be positive for the bound")));
    }
    let w = model.incremental_variance(t, s)?.max(0.0);
    let bound = (w / vs).sqrt() * (1.0 + vs / r);
    // X_s = a Z1, X_t = b Z1 + c Z2
    let a = vs.sqrt();
    let b = r / a;
    let c = (vt - b * b).max(0.0).sqrt();
    let chunks = count.div_ceil(CHUNK);
    let (up, down) = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut g = rng::stream(seed, k as u64);
            let m = CHUNK.min(count - k * CHUNK);
            let (mut up, mut down) = (0usize, 0usize);
            for _ in 0..m {
                let z1: f64 = g.sample(StandardNormal);
                let z2: f64 = g.sample(StandardNormal);
                let (xs, xt) = (a * z1, b * z1 + c * z2);
                if xs < 0.0 && xt > 0.0 {
                    up += 1;
                } else if xs > 0.0 && xt < 0.0 {
                    down += 1;
                }
            }
            (up, down)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let empirical = EstimateWithCI::proportion(up, count, CONFIDENCE);
    let reverse = EstimateWithCI::proportion(down, count, CONFIDENCE);
    // the events are disjoint: Var(1_A − 1_B) = p_A + p_B − (p_A − p_B)²
    let (pa, pb) = (empirical.estimate, reverse.estimate);
    let diff_se = ((pa + pb - (pa - pb).powi(2)) / count as f64).sqrt();
    let symmetric = (pa - pb).abs() <= SYMMETRY_Z * diff_se;
    let implied_c = (bound > 0.0).then(|| pa / bound);
    Ok(CrossingReport { s, t, empirical, reverse, bound, implied_c, symmetric })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingSweep {
    pub reports: Vec<CrossingReport>,
    /// `max C / min C` over the sweep points with a positive implied constant.
    pub c_ratio: f64,
    pub all_symmetric: bool,
}

/// [`crossing_check`] at `t = s + lag` for each lag, each point on its own seed.
pub fn crossing_sweep(model: &CovarianceModel, s: f64, lags: &[f64], count: usize, seed: u64) -> Result<CrossingSweep> {
    let reports = lags
        .iter()
        .enumerate()
        .map(|(i, &l)| crossing_check(model, s, s + l, count, rng::derive(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let cs: Vec<f64> = reports.iter().filter_map(|r| r.implied_c).filter(|&c| c > 0.0).collect();
    let c_ratio = if cs.is_empty() {
        f64::INFINITY
    } else {
        cs.iter().cloned().fold(0.0, f64::max) / cs.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let all_symmetric = reports.iter().all(|r| r.symmetric);
    Ok(CrossingSweep { reports, c_ratio, all_symmetric })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_pair() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let r = crossing_check(&m, 0.5, 0.5, 10_000, 1).unwrap();
        assert_eq!(r.empirical.estimate, 0.0);
        assert_eq!(r.bound, 0.0);
        assert!(r.implied_c.is_none());
    }

    #[test]
    fn brownian_crossing_matches_arcsine_law() {
        // for Brownian motion P(X_s < 0 < X_t) = arccos(√(s/t))/(2π)
        let m = CovarianceModel::fbm(0.5 + 1e-9, 1.0).unwrap();
        let (s, t) = (0.5, 0.7);
        let r = crossing_check(&m, s, t, 200_000, 9).unwrap();
        let exact = (s / t).sqrt().acos() / (2.0 * std::f64::consts::PI);
        assert!((r.empirical.estimate - exact).abs() < 4.0 * r.empirical.std_error);
        assert!(r.symmetric);
    }

    #[test]
    fn reproducible() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let a = crossing_check(&m, 0.5, 0.55, 10_000, 3).unwrap();
        let b = crossing_check(&m, 0.5, 0.55, 10_000, 3).unwrap();
        assert_eq!(a.empirical, b.empirical);
    }
}
