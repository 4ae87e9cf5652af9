use super::derivative::{cell_weights, left_singular_integrals, LagWeights};
use super::{Beta, GridFunction};
use crate::error::{Error, Result};

/// Finite stand-in reported for norms that overflow.
pub const W1_SENTINEL: f64 = 1e12;
/// Refinement growth exponent above which the `W^β_1` norm is deemed divergent.
pub const W1_GROWTH_EXPONENT: f64 = 0.08;

/// `‖f‖_{2,β}` restricted to `[0, t]`:
/// `∫_0^t |f(s)|/s^β ds + ∫_0^t ∫_0^s |f(u) − f(s)|/(s − u)^{1+β} du ds`.
pub fn besov_norm_w2(f: &GridFunction, beta: Beta, t: f64) -> Result<f64> {
    let j = f.index_of(t)?;
    let g = f.grid();
    if g.start() != 0.0 {
        return Err(Error::Grid("W2 norm needs a grid starting at 0".into()));
    }
    if j == 0 {
        return Ok(0.0);
    }
    let b = beta.get();
    let times = &g.points()[..=j];
    let v = &f.values()[..=j];

    // first term: |f| linear on cells, s^{-β} exact
    let mut first = 0.0;
    for k in 0..j {
        let (u0, u1) = (times[k], times[k + 1]);
        let h = u1 - u0;
        let i0 = (u1.powf(1.0 - b) - u0.powf(1.0 - b)) / (1.0 - b);
        let i1 = (u1.powf(2.0 - b) - u0.powf(2.0 - b)) / (2.0 - b);
        let (p, q) = (v[k].abs(), v[k + 1].abs());
        // p at u0, q at u1
        first += p * (u1 * i0 - i1) / h + q * (i1 - u0 * i0) / h;
    }

    let inner = left_singular_integrals(times, g.is_uniform(), b, |i, k| (v[i] - v[k]).abs());
    let second: f64 = times.windows(2).zip(inner.windows(2)).map(|(t, w)| 0.5 * (t[1] - t[0]) * (w[0] + w[1])).sum();
    Ok(first + second)
}

/// Grid value of `‖g‖_{1,β}` with a divergence diagnosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovW1 {
    /// Norm on the full grid, or [`W1_SENTINEL`] when it overflows.
    pub value: f64,
    /// Norm on the grid coarsened by four (or two), for the growth estimate.
    pub coarse_value: f64,
    /// `log(value/coarse)/log(stride)`: ≈ 0 for convergent norms.
    pub growth_exponent: f64,
    pub overflow: bool,
}

fn w1_raw(times: &[f64], uniform: bool, v: &[f64], b: f64) -> f64 {
    let n = times.len();
    let weights = uniform.then(|| LagWeights::new(times[1] - times[0], b, n));
    let mut sup: f64 = 0.0;
    for i in 0..n - 1 {
        let mut integral = 0.0;
        for k in i..n - 1 {
            let l = k - i;
            let q = (v[k] - v[i]).abs();
            let p = (v[k + 1] - v[i]).abs();
            let (wq, wp) = match &weights {
                Some(w) => w.get(l),
                None => cell_weights(times[k] - times[i], times[k + 1] - times[i], b),
            };
            integral += if l == 0 { p * wp } else { q * wq + p * wp };
            let quotient = p / (times[k + 1] - times[i]).powf(b);
            sup = sup.max(quotient + integral);
        }
    }
    sup
}

/// `sup_{s<t} ( |g(t) − g(s)|/(t − s)^β + ∫_s^t |g(u) − g(s)|/(u − s)^{1+β} du )`.
pub fn besov_norm_w1(g: &GridFunction, beta: Beta) -> Result<BesovW1> {
    let grid = g.grid();
    let b = beta.get();
    let value = w1_raw(grid.points(), grid.is_uniform(), g.values(), b);
    let n = grid.intervals();
    let stride = if n.is_multiple_of(4) && n >= 16 {
        4
    } else if n.is_multiple_of(2) && n >= 8 {
        2
    } else {
        1
    };
    let (coarse_value, growth_exponent) = if stride > 1 {
        let c = g.coarsen(stride)?;
        let cv = w1_raw(c.grid().points(), c.grid().is_uniform(), c.values(), b);
        let rho = if cv > 0.0 && value > 0.0 { (value / cv).ln() / (stride as f64).ln() } else { 0.0 };
        (cv, rho)
    } else {
        (value, 0.0)
    };
    let overflow = !value.is_finite() || value > W1_SENTINEL || growth_exponent > W1_GROWTH_EXPONENT;
    Ok(BesovW1 {
        value: if value.is_finite() { value.min(W1_SENTINEL) } else { W1_SENTINEL },
        coarse_value,
        growth_exponent,
        overflow,
    })
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
    fn zero_function_norms() {
        let f = GridFunction::from_fn(grid(32), |_| 0.0).unwrap();
        let b = Beta::new(0.5).unwrap();
        assert_eq!(besov_norm_w2(&f, b, 1.0).unwrap(), 0.0);
        assert_eq!(besov_norm_w1(&f, b).unwrap().value, 0.0);
    }

    #[test]
    fn constant_w2() {
        // c t^{1−β}/(1−β) = 2c at t = 1, β = ½
        let f = GridFunction::from_fn(grid(64), |_| 1.5).unwrap();
        let v = besov_norm_w2(&f, Beta::new(0.5).unwrap(), 1.0).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_w2_closed_form() {
        // 1/1.75 + 1/(0.75·1.75)
        let f = GridFunction::from_fn(grid(512), |s| s).unwrap();
        let v = besov_norm_w2(&f, Beta::new(0.25).unwrap(), 1.0).unwrap();
        let exact = 1.0 / 1.75 + 1.0 / (0.75 * 1.75);
        assert!((v - exact).abs() < 1e-5, "{v} vs {exact}");
    }

    #[test]
    fn w2_monotone_in_t() {
        let f = GridFunction::from_fn(grid(64), |s| (7.0 * s).sin()).unwrap();
        let b = Beta::new(0.4).unwrap();
        let mut prev = 0.0;
        for k in 0..=64 {
            let v = besov_norm_w2(&f, b, k as f64 / 64.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn identity_w1_is_three_root_t() {
        let f = GridFunction::from_fn(grid(256), |s| s).unwrap();
        let r = besov_norm_w1(&f, Beta::new(0.5).unwrap()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-9, "{r:?}");
        assert!(!r.overflow);
    }
}
