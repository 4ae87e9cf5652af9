//! Fractional calculus on grid functions.
//!
//! All singular integrals are evaluated by product integration: on each
//! grid cell the (absolute) increment of the function is interpolated
//! linearly and the power kernel is integrated exactly.

mod besov;
mod derivative;
mod gls;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gp_sim::SamplePath;
use crate::grid::TimeGrid;

pub use besov::{besov_norm_w1, besov_norm_w2, BesovW1};
pub use derivative::{rl_derivative_left, rl_derivative_right, rl_integral_left, DerivativeGrowth, Side};
pub use gls::{default_beta, gls_admissibility, gls_bound, gls_integral, gls_integral_checked, Admissibility};

/// Refinement growth factor above which a derivative is flagged as overflowing.
pub const OVERFLOW_GROWTH_FACTOR: f64 = 10.0;

/// Fractional order in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::Window(format!("0 < β < 1 (got {value})")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 − β`.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// Real values sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<TimeGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        let grid = Arc::new(self.grid.coarsen(stride)?);
        Ok(Self { grid, values: self.values.iter().copied().step_by(stride).collect() })
    }

    /// Index of time `t`, which must be a grid point.
    pub(crate) fn index_of(&self, t: f64) -> Result<usize> {
        self.grid.index_of(t).ok_or_else(|| Error::Invalid(format!("t = {t} is not a grid point")))
    }
}

impl From<&SamplePath> for GridFunction {
    fn from(p: &SamplePath) -> Self {
        Self { grid: p.grid.clone(), values: p.values.clone() }
    }
}

impl From<SamplePath> for GridFunction {
    fn from(p: SamplePath) -> Self {
        Self { grid: p.grid, values: p.values }
    }
}
