use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing time points `0 = u_0 < u_1 < … < u_N = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    /// Uniform grid on `[0, horizon]` with `intervals` cells.
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Grid(format!("horizon must be positive, got {horizon}")));
        }
        if intervals < 2 {
            return Err(Error::Grid(format!("need at least 2 intervals, got {intervals}")));
        }
        let h = horizon / intervals as f64;
        let mut points: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
        points[intervals] = horizon;
        Ok(Self { points, uniform: true })
    }

    /// Uniform grid on `[start, end]`; used for local windows such as small-ball checks.
    pub fn uniform_on(start: f64, end: f64, intervals: usize) -> Result<Self> {
        if !(end > start) || intervals < 2 {
            return Err(Error::Grid(format!("bad window [{start}, {end}] with {intervals} cells")));
        }
        let h = (end - start) / intervals as f64;
        let mut points: Vec<f64> = (0..=intervals).map(|i| start + i as f64 * h).collect();
        points[intervals] = end;
        Ok(Self { points, uniform: true })
    }

    /// Arbitrary grid; must start at 0 and increase strictly.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Grid("need at least 3 points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::Grid("first point must be 0".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("points must be strictly increasing".into()));
        }
        let h0 = points[1] - points[0];
        let uniform = points.windows(2).all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-12 * h0.max(1.0));
        Ok(Self { points, uniform })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of cells `N`.
    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn horizon(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Cell width of a uniform grid (the mean width otherwise).
    pub fn step(&self) -> f64 {
        (self.horizon() - self.start()) / self.intervals() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of the grid point nearest to `t`; ties go to the later point.
    pub fn nearest_index(&self, t: f64) -> usize {
        let p = &self.points;
        if t <= p[0] {
            return 0;
        }
        if t >= p[p.len() - 1] {
            return p.len() - 1;
        }
        if self.uniform {
            let i = ((t - p[0]) / self.step()).round() as usize;
            return i.min(p.len() - 1);
        }
        let hi = p.partition_point(|&x| x < t);
        let lo = hi - 1;
        if t - p[lo] < p[hi] - t {
            lo
        } else {
            hi
        }
    }

    /// Exact index of a grid time, if `t` is (to rounding) a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.nearest_index(t);
        let tol = 1e-9 * self.step();
        ((self.points[i] - t).abs() <= tol).then_some(i)
    }

    /// How many times the grid can be halved by dropping every other point.
    pub fn dyadic_depth(&self) -> usize {
        let n = self.intervals();
        n.trailing_zeros() as usize
    }

    /// Every `stride`-th point; `stride` must divide `N`.
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        let n = self.intervals();
        if stride == 0 || !n.is_multiple_of(stride) || n / stride < 2 {
            return Err(Error::Grid(format!("stride {stride} does not divide {n} cells")));
        }
        let points: Vec<f64> = self.points.iter().copied().step_by(stride).collect();
        Ok(Self { points, uniform: self.uniform })
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_endpoints() {
        let g = TimeGrid::uniform(2.0, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.start(), 0.0);
        assert_eq!(g.horizon(), 2.0);
        assert_eq!(g.step(), 0.25);
        assert_eq!(g.dyadic_depth(), 3);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::uniform(0.0, 8).is_err());
        assert!(TimeGrid::uniform(1.0, 1).is_err());
        assert!(TimeGrid::from_points(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimeGrid::from_points(vec![0.1, 0.5, 1.0]).is_err());
    }

    #[test]
    fn nearest_and_exact_index() {
        let g = TimeGrid::from_points(vec![0.0, 0.1, 0.3, 0.7, 1.0]).unwrap();
        assert!(!g.is_uniform());
        assert_eq!(g.nearest_index(0.26), 2);
        assert_eq!(g.nearest_index(0.5), 3);
        assert_eq!(g.index_of(0.7), Some(3));
        assert_eq!(g.index_of(0.71), None);
        let u = TimeGrid::uniform(1.0, 16).unwrap();
        assert_eq!(u.nearest_index(0.5), 8);
        assert_eq!(u.coarsen(4).unwrap().len(), 5);
        assert!(u.coarsen(3).is_err());
    }
}
