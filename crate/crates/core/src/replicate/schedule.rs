use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// `Σ_{k>m} k^{−γ}` by Euler–Maclaurin; the error is below `m^{−γ−3}`.
fn zeta_tail(gamma: f64, m: usize) -> f64 {
    let m = m as f64;
    m.powf(1.0 - gamma) / (gamma - 1.0) - 0.5 * m.powf(-gamma) + gamma * m.powf(-gamma - 1.0) / 12.0
        - gamma * (gamma + 1.0) * (gamma + 2.0) * m.powf(-gamma - 3.0) / 720.0
}

/// Smallest power-of-two cutoff from which [`zeta_tail`] is accurate to `tol`.
fn tail_cutoff(gamma: f64, tol: f64) -> usize {
    let mut m = 16usize;
    // next omitted Euler–Maclaurin term ~ m^{−γ−5}
    while (m as f64).powf(-gamma - 5.0) * gamma.powi(5) > tol && m < 1 << 20 {
        m *= 2;
    }
    m
}

fn partial_sum(gamma: f64, m: usize) -> f64 {
    (1..=m).rev().map(|k| (k as f64).powf(-gamma)).sum()
}

/// `Σ_{k≥1} k^{−γ}` to relative accuracy `tol`.
fn zeta(gamma: f64, tol: f64) -> f64 {
    let m = tail_cutoff(gamma, tol);
    partial_sum(gamma, m) + zeta_tail(gamma, m)
}

/// Block times `t_n = start + Σ_{k≤n} Δ_k` with `Δ_n = (T − start) n^{−γ}/S_γ`.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionSchedule {
    pub gamma: f64,
    pub start: f64,
    pub horizon: f64,
    pub n_max: usize,
    /// `S_γ = Σ_{k≥1} k^{−γ}`.
    pub normalizer: f64,
    /// `Δ_1, …, Δ_{n_max}`.
    pub gaps: Vec<f64>,
    /// `t_0 = start, t_1, …, t_{n_max}`.
    pub times: Vec<f64>,
    /// `Σ_{n>n_max} Δ_n`.
    pub tail_mass: f64,
}

impl PartitionSchedule {
    pub fn new(gamma: f64, horizon: f64, n_max: usize, tail_tol: f64) -> Result<Self> {
        Self::on(gamma, 0.0, horizon, n_max, tail_tol)
    }

    /// Schedule on `[start, horizon)`.
    pub fn on(gamma: f64, start: f64, horizon: f64, n_max: usize, tail_tol: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Window(format!("γ > 1 (got {gamma}); the gap series diverges")));
        }
        if n_max < 2 {
            return Err(Error::Invalid(format!("n_max ≥ 2 (got {n_max})")));
        }
        if !(horizon > start) {
            return Err(Error::Invalid(format!("empty schedule window [{start}, {horizon})")));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::Invalid("tail tolerance must be positive".into()));
        }
        let span = horizon - start;
        let normalizer = zeta(gamma, tail_tol);
        let gaps: Vec<f64> = (1..=n_max).map(|n| span * (n as f64).powf(-gamma) / normalizer).collect();
        let mut times = Vec::with_capacity(n_max + 1);
        let mut t = start;
        times.push(t);
        for g in &gaps {
            t += g;
            times.push(t.min(horizon));
        }
        let tail = if n_max >= tail_cutoff(gamma, tail_tol) {
            zeta_tail(gamma, n_max)
        } else {
            normalizer - partial_sum(gamma, n_max)
        };
        let tail_mass = span * tail / normalizer;
        Ok(Self { gamma, start, horizon, n_max, normalizer, gaps, times, tail_mass })
    }

    /// `t_n` snapped to the nearest grid index, forced nondecreasing and
    /// strictly below the last grid point.
    pub fn grid_indices(&self, grid: &TimeGrid) -> Vec<usize> {
        let last = grid.intervals();
        let mut prev = 0;
        self.times
            .iter()
            .enumerate()
            .map(|(n, &t)| {
                let mut i = grid.nearest_index(t);
                if n > 0 {
                    i = i.max(prev).min(last.saturating_sub(1).max(prev));
                }
                prev = i;
                i
            })
            .collect()
    }
}
