use statrs::function::gamma::gamma;

use super::{Beta, GridFunction, OVERFLOW_GROWTH_FACTOR};
use crate::error::{Error, Result};

/// Which endpoint a Weyl-form derivative is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Cell weights for `∫_a^b c(w) w^{-β-1} dw` when `c` is linear with value
/// `q` at `w = a` and `p` at `w = b`: the integral is `q·wq + p·wp`.
#[inline]
pub(crate) fn cell_weights(a: f64, b: f64, beta: f64) -> (f64, f64) {
    let h = b - a;
    let pos = (b.powf(1.0 - beta) - if a > 0.0 { a.powf(1.0 - beta) } else { 0.0 }) / (1.0 - beta);
    if a == 0.0 {
        return (f64::INFINITY, pos / h);
    }
    let neg = (a.powf(-beta) - b.powf(-beta)) / beta;
    let wp = (pos - a * neg) / h;
    let wq = (b * neg - pos) / h;
    (wq, wp)
}

/// Lag-indexed cell weights of a uniform grid: entry `l` is the cell whose
/// near end is `l` steps from the evaluation point.
pub(crate) struct LagWeights {
    wq: Vec<f64>,
    wp: Vec<f64>,
}

impl LagWeights {
    pub(crate) fn new(h: f64, beta: f64, n: usize) -> Self {
        let (wq, wp) = (0..n).map(|l| cell_weights(l as f64 * h, (l + 1) as f64 * h, beta)).unzip();
        Self { wq, wp }
    }

    #[inline]
    pub(crate) fn get(&self, l: usize) -> (f64, f64) {
        (self.wq[l], self.wp[l])
    }
}

/// `∫_0^{s_i} c_i(u) (s_i − u)^{-β-1} du` for every `i`, where `c_i` is the
/// linear interpolant of `node(i, k)` over the cells left of `s_i`.
/// `node(i, i)` must vanish.
pub(crate) fn left_singular_integrals(
    times: &[f64],
    uniform: bool,
    beta: f64,
    node: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![0.0; n];
    if uniform {
        let h = (times[n - 1] - times[0]) / (n - 1) as f64;
        let w = LagWeights::new(h, beta, n);
        for (i, slot) in out.iter_mut().enumerate().skip(1) {
            let mut acc = 0.0;
            for k in 0..i {
                let l = i - k - 1;
                let p = node(i, k);
                if l == 0 {
                    acc += p * w.wp[0];
                } else {
                    acc += node(i, k + 1) * w.wq[l] + p * w.wp[l];
                }
            }
            *slot = acc;
        }
    } else {
        for i in 1..n {
            let s = times[i];
            let mut acc = 0.0;
            for k in 0..i {
                let (wq, wp) = cell_weights(s - times[k + 1], s - times[k], beta);
                let p = node(i, k);
                acc += if k + 1 == i { p * wp } else { node(i, k + 1) * wq + p * wp };
            }
            out[i] = acc;
        }
    }
    out
}

/// Weyl form of the left derivative on raw slices; index 0 gets 0.
pub(crate) fn weyl_left(times: &[f64], uniform: bool, values: &[f64], beta: f64) -> Vec<f64> {
    let t0 = times[0];
    let inc = left_singular_integrals(times, uniform, beta, |i, k| values[i] - values[k]);
    let norm = 1.0 / gamma(1.0 - beta);
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        let s = times[i] - t0;
        out[i] = norm * (values[i] / s.powf(beta) + beta * inc[i]);
    }
    out
}

/// `(D^β_{0+} f)(s) = 1/Γ(1−β) ( f(s)/s^β + β ∫_0^s (f(s) − f(u))/(s − u)^{β+1} du )`
/// on every grid point; the value at `s = 0` is 0.
///
/// No constant is subtracted; callers that need `f_{0+}` subtract `f(0)`.
pub fn rl_derivative_left(f: &GridFunction, beta: Beta) -> Result<GridFunction> {
    let g = f.grid();
    if g.start() != 0.0 {
        return Err(Error::Grid("left derivative needs a grid starting at 0".into()));
    }
    let values = weyl_left(g.points(), g.is_uniform(), f.values(), beta.get());
    GridFunction::new(g.clone(), values)
}

/// Reversed-time view `v ↦ g(t − v) − g(t)` of the grid up to index `j`.
fn reversed_increments(f: &GridFunction, j: usize) -> (Vec<f64>, Vec<f64>) {
    let times = f.grid().points();
    let t = times[j];
    let gt = f.values()[j];
    let rt: Vec<f64> = (0..=j).map(|k| t - times[j - k]).collect();
    let rv: Vec<f64> = (0..=j).map(|k| f.values()[j - k] - gt).collect();
    (rt, rv)
}

/// Right derivative of `g_{t−}(s) = g(s) − g(t)`:
/// `1/Γ(1−β) ( g_{t−}(s)/(t−s)^β + β ∫_s^t (g(s) − g(u))/(u − s)^{β+1} du )`
/// for `s < t`; zero for `s ≥ t`. The complex unit prefactor is omitted.
pub fn rl_derivative_right(g: &GridFunction, order: Beta, t: f64) -> Result<GridFunction> {
    let j = g.index_of(t)?;
    let mut out = vec![0.0; g.len()];
    if j > 0 {
        let (rt, rv) = reversed_increments(g, j);
        let d = weyl_left(&rt, g.grid().is_uniform(), &rv, order.get());
        for k in 0..j {
            out[k] = d[j - k];
        }
    }
    GridFunction::new(g.grid().clone(), out)
}

/// `(I^β_{0+} f)(s) = 1/Γ(β) ∫_0^s f(u) (s − u)^{β−1} du`, product integrated.
pub fn rl_integral_left(f: &GridFunction, beta: Beta) -> Result<GridFunction> {
    let g = f.grid();
    let b = beta.get();
    let times = g.points();
    let v = f.values();
    let norm = 1.0 / gamma(b);
    let mut out = vec![0.0; v.len()];
    for i in 1..v.len() {
        let s = times[i];
        let mut acc = 0.0;
        for k in 0..i {
            // kernel w^{β−1} on w ∈ [s − u_{k+1}, s − u_k]
            let (a, bb) = (s - times[k + 1], s - times[k]);
            let h = bb - a;
            let i0 = (bb.powf(b) - a.powf(b)) / b;
            let i1 = (bb.powf(b + 1.0) - a.powf(b + 1.0)) / (b + 1.0);
            // linear in w: value v[k+1] at w = a, v[k] at w = b
            let wp = (i1 - a * i0) / h;
            let wq = (bb * i0 - i1) / h;
            acc += v[k + 1] * wq + v[k] * wp;
        }
        out[i] = norm * acc;
    }
    GridFunction::new(g.clone(), out)
}

/// Growth of a derivative between the stride-2 coarsening and the full grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeGrowth {
    pub fine: f64,
    pub coarse: f64,
    pub ratio: f64,
    pub overflow: bool,
}

impl DerivativeGrowth {
    pub(crate) fn from_pair(fine: f64, coarse: f64) -> Self {
        let ratio = if coarse > 0.0 {
            fine / coarse
        } else if fine > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        let overflow = !fine.is_finite() || ratio > OVERFLOW_GROWTH_FACTOR;
        Self { fine, coarse, ratio, overflow }
    }
}

pub(crate) fn trapezoid_abs(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].abs() + v[1].abs())).sum()
}

pub(crate) fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}
