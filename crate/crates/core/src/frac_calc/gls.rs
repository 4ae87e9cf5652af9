use serde::Serialize;

use super::besov::besov_norm_w2;
use super::derivative::{sup_abs, trapezoid_abs, weyl_left, DerivativeGrowth, Side};
use super::{Beta, GridFunction};
use crate::error::{Error, Result};

/// Interior default for integrals against `α`-Hölder integrators.
///
/// `1 − α + 0.5·min(α, 0.5)` when that lies strictly inside `(1 − α, 0.5)`,
/// otherwise the midpoint of that window.
pub fn default_beta(alpha: f64) -> Result<Beta> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::Window(format!("1/2 < α < 1 (got {alpha})")));
    }
    let lo = 1.0 - alpha;
    let candidate = lo + 0.5 * alpha.min(0.5);
    let b = if candidate > lo && candidate < 0.5 { candidate } else { 0.5 * (lo + 0.5) };
    Beta::new(b)
}

/// `(D^β_{0+} f_{0+})` and `(D^{1−β}_{t−} g_{t−})` on `[0, t]`, without prefactors.
struct Derivatives {
    times: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

fn derivatives(f: &[f64], g: &[f64], times: &[f64], uniform: bool, beta: f64) -> Derivatives {
    let j = times.len() - 1;
    let f0 = f[0];
    let shifted: Vec<f64> = f.iter().map(|v| v - f0).collect();
    let left = weyl_left(times, uniform, &shifted, beta);

    let t = times[j];
    let rt: Vec<f64> = (0..=j).map(|k| t - times[j - k]).collect();
    let rv: Vec<f64> = (0..=j).map(|k| g[j - k] - g[j]).collect();
    let rd = weyl_left(&rt, uniform, &rv, 1.0 - beta);
    let right = (0..=j).map(|k| if k < j { rd[j - k] } else { 0.0 }).collect();
    Derivatives { times: times.to_vec(), left, right }
}

/// Last index, then times, `f` and `g` on `[0, t]`.
type Prepared<'a> = (usize, &'a [f64], &'a [f64], &'a [f64]);

fn prepare<'a>(f: &'a GridFunction, g: &'a GridFunction, t: f64) -> Result<Prepared<'a>> {
    if f.grid() != g.grid() && f.grid().points() != g.grid().points() {
        return Err(Error::Grid("integrand and integrator must share a grid".into()));
    }
    if f.grid().start() != 0.0 {
        return Err(Error::Grid("integration needs a grid starting at 0".into()));
    }
    let j = f.index_of(t)?;
    Ok((j, &f.grid().points()[..=j], &f.values()[..=j], &g.values()[..=j]))
}

fn integral_from(d: &Derivatives, f0: f64, g0: f64, gt: f64) -> f64 {
    let prod: f64 = d
        .times
        .windows(2)
        .enumerate()
        .map(|(k, w)| 0.5 * (w[1] - w[0]) * (d.left[k] * d.right[k] + d.left[k + 1] * d.right[k + 1]))
        .sum();
    // the unit prefactors of the two operators combine to −1
    -prod + f0 * (gt - g0)
}

/// `∫_0^t f dg` as the Lebesgue integral of the product of the left
/// derivative of `f − f(0)` and the right derivative of `g_{t−}`, plus
/// `f(0)(g(t) − g(0))` for the constant part.
pub fn gls_integral(f: &GridFunction, g: &GridFunction, beta: Beta, t: f64) -> Result<f64> {
    let (j, times, fv, gv) = prepare(f, g, t)?;
    if j == 0 {
        return Ok(0.0);
    }
    let d = derivatives(fv, gv, times, f.grid().is_uniform(), beta.get());
    Ok(integral_from(&d, fv[0], gv[0], gv[j]))
}

/// `sup_s |D^{1−β}_{t−} g_{t−}(s)| · ‖f‖_{t,β}`.
pub fn gls_bound(f: &GridFunction, g: &GridFunction, beta: Beta, t: f64) -> Result<f64> {
    let (j, times, fv, gv) = prepare(f, g, t)?;
    if j == 0 {
        return Ok(0.0);
    }
    let d = derivatives(fv, gv, times, f.grid().is_uniform(), beta.get());
    let norm = besov_norm_w2(f, beta, t)?;
    Ok(sup_abs(&d.right) * norm)
}

/// Refinement diagnosis of the two derivatives entering the integral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Admissibility {
    /// `L¹` norm of the left derivative, full grid vs every second point.
    pub left_fine: f64,
    pub left_coarse: f64,
    /// Supremum of the right derivative, full grid vs every second point.
    pub right_fine: f64,
    pub right_coarse: f64,
    pub left_overflow: bool,
    pub right_overflow: bool,
    /// `‖f‖_{t,β}`.
    pub w2_norm: f64,
    pub admissible: bool,
}

impl Admissibility {
    pub fn growth(&self, side: Side) -> DerivativeGrowth {
        match side {
            Side::Left => DerivativeGrowth::from_pair(self.left_fine, self.left_coarse),
            Side::Right => DerivativeGrowth::from_pair(self.right_fine, self.right_coarse),
        }
    }
}

pub fn gls_admissibility(f: &GridFunction, g: &GridFunction, beta: Beta, t: f64) -> Result<Admissibility> {
    let (j, times, fv, gv) = prepare(f, g, t)?;
    let b = beta.get();
    let uniform = f.grid().is_uniform();
    let d = derivatives(fv, gv, times, uniform, b);
    let left_fine = trapezoid_abs(&d.times, &d.left);
    let right_fine = sup_abs(&d.right);
    let (left_coarse, right_coarse) = if j >= 4 && j % 2 == 0 {
        let ct: Vec<f64> = times.iter().copied().step_by(2).collect();
        let cf: Vec<f64> = fv.iter().copied().step_by(2).collect();
        let cg: Vec<f64> = gv.iter().copied().step_by(2).collect();
        let c = derivatives(&cf, &cg, &ct, uniform, b);
        (trapezoid_abs(&c.times, &c.left), sup_abs(&c.right))
    } else {
        (left_fine, right_fine)
    };
    let left = DerivativeGrowth::from_pair(left_fine, left_coarse);
    let right = DerivativeGrowth::from_pair(right_fine, right_coarse);
    let w2_norm = besov_norm_w2(f, beta, t)?;
    let admissible = !left.overflow && !right.overflow && w2_norm.is_finite();
    Ok(Admissibility {
        left_fine,
        left_coarse,
        right_fine,
        right_coarse,
        left_overflow: left.overflow,
        right_overflow: right.overflow,
        w2_norm,
        admissible,
    })
}

/// [`gls_integral`] that refuses when either derivative overflows under refinement.
pub fn gls_integral_checked(f: &GridFunction, g: &GridFunction, beta: Beta, t: f64) -> Result<f64> {
    let a = gls_admissibility(f, g, beta, t)?;
    if !a.admissible {
        return Err(Error::Inadmissible(format!(
            "β = {} overflows (left {:.3e} → {:.3e}, right {:.3e} → {:.3e})",
            beta.get(),
            a.left_coarse,
            a.left_fine,
            a.right_coarse,
            a.right_fine
        )));
    }
    gls_integral(f, g, beta, t)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::TimeGrid;

    fn grid(n: usize) -> Arc<TimeGrid> {
        TimeGrid::uniform(1.0, n).unwrap().shared()
    }

    #[test]
    fn constant_integrand_telescopes() {
        let g = GridFunction::from_fn(grid(128), |s| (3.0 * s).sin() + s * s).unwrap();
        let f = GridFunction::from_fn(grid(128), |_| 1.0).unwrap();
        let v = gls_integral(&f, &g, Beta::new(0.4).unwrap(), 1.0).unwrap();
        assert!((v - (g.values()[128] - g.values()[0])).abs() < 1e-14);
    }

    #[test]
    fn identity_against_identity() {
        let g = GridFunction::from_fn(grid(1024), |s| s).unwrap();
        for b in [0.3, 0.4, 0.45] {
            let v = gls_integral(&g, &g, Beta::new(b).unwrap(), 1.0).unwrap();
            assert!((v - 0.5).abs() < 1e-3, "β = {b}: {v}");
        }
    }

    #[test]
    fn smooth_pair_matches_riemann_stieltjes() {
        // ∫_0^1 cos(s) d(s²) = 2(cos 1 + sin 1 − 1)
        let f = GridFunction::from_fn(grid(1024), f64::cos).unwrap();
        let g = GridFunction::from_fn(grid(1024), |s| s * s).unwrap();
        let exact = 2.0 * (1f64.cos() + 1f64.sin() - 1.0);
        let v = gls_integral(&f, &g, Beta::new(0.35).unwrap(), 1.0).unwrap();
        assert!((v - exact).abs() < 1e-3, "{v} vs {exact}");
    }

    #[test]
    fn bound_dominates() {
        let f = GridFunction::from_fn(grid(256), |_| 1.0).unwrap();
        let g = GridFunction::from_fn(grid(256), |s| s).unwrap();
        let b = Beta::new(0.5).unwrap();
        assert!(gls_bound(&f, &g, b, 1.0).unwrap() >= 1.0);
        let z = GridFunction::from_fn(grid(256), |_| 0.0).unwrap();
        assert_eq!(gls_bound(&z, &g, b, 1.0).unwrap(), 0.0);
        assert_eq!(gls_integral(&z, &g, b, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn intermediate_time() {
        let g = GridFunction::from_fn(grid(512), |s| s).unwrap();
        let v = gls_integral(&g, &g, Beta::new(0.4).unwrap(), 0.5).unwrap();
        assert!((v - 0.125).abs() < 1e-3);
    }

    #[test]
    fn default_beta_is_interior() {
        let b = default_beta(0.75).unwrap().get();
        assert!((b - 0.375).abs() < 1e-15);
        for a in [0.55, 0.6, 0.7, 0.9, 0.99] {
            let b = default_beta(a).unwrap().get();
            assert!(b > 1.0 - a && b < 0.5);
        }
        assert!(default_beta(0.4).unwrap_err().is_window());
    }

    #[test]
    fn smooth_pair_is_admissible() {
        let g = GridFunction::from_fn(grid(256), |s| s).unwrap();
        let a = gls_admissibility(&g, &g, Beta::new(0.4).unwrap(), 1.0).unwrap();
        assert!(a.admissible, "{a:?}");
        assert!(gls_integral_checked(&g, &g, Beta::new(0.4).unwrap(), 1.0).is_ok());
    }
}
