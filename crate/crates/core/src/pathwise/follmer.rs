use serde::Serialize;

use crate::error::{Error, Result};
use crate::frac_calc::GridFunction;
use crate::gp_sim::SamplePath;

/// Forward sums along dyadic coarsenings of a grid.
#[derive(Debug, Clone, Serialize)]
pub struct FollmerResult {
    /// Value at the finest level (the full grid).
    pub value: f64,
    /// Sums from the coarsest level to the finest.
    pub partial_sums: Vec<f64>,
    /// `|S_finest − S_next|`.
    pub gap: f64,
    pub tolerance: f64,
    pub converged: bool,
}

fn forward_sum(y: &[f64], x: &[f64], stride: usize) -> f64 {
    let mut acc = 0.0;
    let mut i = 0;
    while i + stride < x.len() {
        acc += y[i] * (x[i + stride] - x[i]);
        i += stride;
    }
    acc
}

/// `Σ Y_{t_{j−1}}(X_{t_j} − X_{t_{j−1}})` over the whole grid at `levels`
/// nested partitions: the full grid and its `levels − 1` successive halvings.
pub fn follmer_integral(y: &GridFunction, x: &SamplePath, levels: usize, tol: f64) -> Result<FollmerResult> {
    if y.grid().points() != x.grid.points() {
        return Err(Error::Grid("integrand and path must share a grid".into()));
    }
    if levels < 2 {
        return Err(Error::Grid("need at least two partition levels".into()));
    }
    let depth = x.grid.dyadic_depth();
    // the coarsest level must still have one cell
    if levels - 1 > depth {
        return Err(Error::Grid(format!("{levels} levels requested, grid supports {}", depth + 1)));
    }
    let partial_sums: Vec<f64> = (0..levels).rev().map(|l| forward_sum(y.values(), &x.values, 1 << l)).collect();
    let value = partial_sums[levels - 1];
    let gap = (value - partial_sums[levels - 2]).abs();
    Ok(FollmerResult { value, partial_sums, gap, tolerance: tol, converged: gap <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn constant_telescopes_at_every_level() {
        let g = TimeGrid::uniform(1.0, 64).unwrap().shared();
        let x = SamplePath::from_values(g.clone(), g.points().iter().map(|t| t.sin()).collect(), "sin").unwrap();
        let y = GridFunction::from_fn(g, |_| 1.0).unwrap();
        let r = follmer_integral(&y, &x, 4, 1e-12).unwrap();
        let exact = x.values[64] - x.values[0];
        assert!(r.partial_sums.iter().all(|s| (s - exact).abs() < 1e-14));
        assert!(r.converged);
    }

    #[test]
    fn identity_converges_to_half() {
        let g = TimeGrid::uniform(1.0, 1024).unwrap().shared();
        let x = SamplePath::from_values(g.clone(), g.points().to_vec(), "id").unwrap();
        let y = GridFunction::from_fn(g, |s| s).unwrap();
        let r = follmer_integral(&y, &x, 5, 1e-3).unwrap();
        // left-point sums: 1/2 − h/2
        assert!((r.value - 0.5).abs() <= 1.0 / 1024.0);
        assert!(r.partial_sums.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn too_many_levels() {
        let g = TimeGrid::uniform(1.0, 8).unwrap().shared();
        let x = SamplePath::from_values(g.clone(), vec![0.0; 9], "z").unwrap();
        let y = GridFunction::from_fn(g, |_| 1.0).unwrap();
        assert!(follmer_integral(&y, &x, 4, 1.0).is_ok());
        assert!(follmer_integral(&y, &x, 5, 1.0).is_err());
    }
}
