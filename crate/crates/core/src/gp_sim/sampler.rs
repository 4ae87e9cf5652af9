use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::model::{CovarianceModel, Kernel, Structure};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rng;

/// Relative diagonal jitter ladder tried when a plain Cholesky fails.
const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Points whose variance is below this fraction of the largest variance are
/// pinned to zero (e.g. `X_0 = 0` for fBm) instead of being factorized.
const ZERO_VARIANCE_REL: f64 = 1e-14;

/// One discretized realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: Arc<TimeGrid>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub index: u64,
    pub model: String,
}

impl SamplePath {
    /// Wrap externally produced values (e.g. an auxiliary path).
    pub fn from_values(grid: Arc<TimeGrid>, values: Vec<f64>, model: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "path has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("path has non-finite values".into()));
        }
        Ok(Self { grid, values, seed: 0, index: 0, model: model.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.grid.nearest_index(t)]
    }

    /// Every `stride`-th value on the coarsened grid.
    pub fn coarsen(&self, stride: usize) -> Result<Self> {
        let grid = Arc::new(self.grid.coarsen(stride)?);
        let values = self.values.iter().copied().step_by(stride).collect();
        Ok(Self { grid, values, seed: self.seed, index: self.index, model: self.model.clone() })
    }
}

/// A set of independent paths sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub grid: Arc<TimeGrid>,
    pub paths: Vec<SamplePath>,
}

impl PathBatch {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SamplePath> {
        self.paths.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMethod {
    /// Dense Cholesky of the grid covariance.
    Cholesky,
    /// Circulant embedding of the stationary increments (fBm on uniform grids from 0).
    CirculantIncrements,
    /// Circulant embedding of a stationary covariance on a uniform grid.
    CirculantStationary,
}

enum Method {
    Cholesky {
        active: Vec<usize>,
        factor: DMatrix<f64>,
    },
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
        /// multiply embedded values by this before use
        scale: f64,
        increments: bool,
    },
}

/// Prepared sampler for one `(model, grid)` pair; the factorization is
/// computed once and shared by every path drawn from it.
pub struct PathSampler {
    grid: Arc<TimeGrid>,
    tag: String,
    method: Method,
}

impl std::fmt::Debug for PathSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathSampler")
            .field("model", &self.tag)
            .field("points", &self.grid.len())
            .field("method", &self.method())
            .finish()
    }
}

/// Cholesky factor of a symmetric PSD matrix with jitter escalation.
pub(crate) fn factor_psd(m: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for &rel in JITTER_LADDER.iter() {
        let mut a = m.clone();
        if rel > 0.0 {
            for i in 0..n {
                a[(i, i)] += rel * scale;
            }
        }
        if let Some(c) = Cholesky::new(a) {
            return Ok((c, rel * scale));
        }
    }
    let min_eigenvalue = SymmetricEigen::new(m.clone()).eigenvalues.min();
    Err(Error::Factorization { min_eigenvalue })
}

impl PathSampler {
    /// Picks the circulant fast path when it applies and is valid,
    /// dense Cholesky otherwise.
    pub fn new(model: &CovarianceModel, grid: Arc<TimeGrid>) -> Result<Self> {
        check_grid(model, &grid)?;
        if grid.is_uniform() {
            let attempt = match (model.kernel(), model.structure()) {
                (Kernel::Fbm { .. }, _) if grid.start() == 0.0 => Self::circulant(model, grid.clone(), true),
                (_, Structure::Stationary) => Self::circulant(model, grid.clone(), false),
                _ => None,
            };
            if let Some(s) = attempt {
                return Ok(s);
            }
        }
        Self::cholesky(model, grid)
    }

    pub fn with_method(model: &CovarianceModel, grid: Arc<TimeGrid>, method: SamplingMethod) -> Result<Self> {
        check_grid(model, &grid)?;
        match method {
            SamplingMethod::Cholesky => Self::cholesky(model, grid),
            SamplingMethod::CirculantIncrements => {
                if !matches!(model.kernel(), Kernel::Fbm { .. }) || !grid.is_uniform() || grid.start() != 0.0 {
                    return Err(Error::Unsupported(
                        "increment embedding needs fBm on a uniform grid starting at 0".into(),
                    ));
                }
                Self::circulant(model, grid, true)
                    .ok_or_else(|| Error::Numerical("negative circulant eigenvalues".into()))
            }
            SamplingMethod::CirculantStationary => {
                if model.structure() != Structure::Stationary || !grid.is_uniform() {
                    return Err(Error::Unsupported(
                        "stationary embedding needs a stationary model on a uniform grid".into(),
                    ));
                }
                Self::circulant(model, grid, false)
                    .ok_or_else(|| Error::Numerical("negative circulant eigenvalues".into()))
            }
        }
    }

    fn cholesky(model: &CovarianceModel, grid: Arc<TimeGrid>) -> Result<Self> {
        let times = grid.points();
        let diag: Vec<f64> = times.iter().map(|&t| model.cov(t, t)).collect();
        let vmax = diag.iter().cloned().fold(0.0, f64::max);
        let active: Vec<usize> = (0..times.len()).filter(|&i| diag[i] > ZERO_VARIANCE_REL * vmax).collect();
        if active.is_empty() {
            return Err(Error::Factorization { min_eigenvalue: 0.0 });
        }
        let sub: Vec<f64> = active.iter().map(|&i| times[i]).collect();
        let cov = model.covariance_matrix(&sub);
        let (chol, _) = factor_psd(&cov)?;
        Ok(Self { grid, tag: model.tag(), method: Method::Cholesky { active, factor: chol.l() } })
    }

    fn circulant(model: &CovarianceModel, grid: Arc<TimeGrid>, increments: bool) -> Option<Self> {
        let n = grid.intervals();
        let h = grid.step();
        // first row of the symmetric circulant of size 2n
        let acf: Vec<f64> = if increments {
            let Kernel::Fbm { hurst } = model.kernel() else { return None };
            let h2 = 2.0 * hurst;
            (0..=n)
                .map(|k| {
                    let k = k as f64;
                    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
                })
                .collect()
        } else {
            (0..=n).map(|k| model.cov(k as f64 * h, 0.0)).collect()
        };
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        row.extend(acf.iter().map(|&v| Complex::new(v, 0.0)));
        row.extend(acf[1..n].iter().rev().map(|&v| Complex::new(v, 0.0)));
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(m).process(&mut row);
        let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
        let emax = eig.iter().cloned().fold(0.0, f64::max);
        if eig.iter().any(|&e| e < -1e-10 * emax) {
            return None;
        }
        let sqrt_eig = eig.iter().map(|&e| (e.max(0.0) / m as f64).sqrt()).collect();
        let scale = if increments {
            let Kernel::Fbm { hurst } = model.kernel() else { return None };
            h.powf(*hurst)
        } else {
            1.0
        };
        Some(Self {
            grid,
            tag: model.tag(),
            method: Method::Circulant { sqrt_eig, fft: planner.plan_fft_inverse(m), scale, increments },
        })
    }

    pub fn method(&self) -> SamplingMethod {
        match &self.method {
            Method::Cholesky { .. } => SamplingMethod::Cholesky,
            Method::Circulant { increments: true, .. } => SamplingMethod::CirculantIncrements,
            Method::Circulant { increments: false, .. } => SamplingMethod::CirculantStationary,
        }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    /// Path number `index` of the batch seeded by `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> SamplePath {
        let mut rng = rng::stream(seed, index);
        let values = match &self.method {
            Method::Cholesky { active, factor } => {
                let z = DVector::from_fn(active.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let x = factor * z;
                let mut values = vec![0.0; self.grid.len()];
                for (k, &i) in active.iter().enumerate() {
                    values[i] = x[k];
                }
                values
            }
            Method::Circulant { sqrt_eig, fft, scale, increments } => {
                let mut buf: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        Complex::new(s * a, s * b)
                    })
                    .collect();
                fft.process(&mut buf);
                let n = self.grid.intervals();
                if *increments {
                    let mut values = Vec::with_capacity(n + 1);
                    let mut acc = 0.0;
                    values.push(0.0);
                    for c in buf.iter().take(n) {
                        acc += scale * c.re;
                        values.push(acc);
                    }
                    values
                } else {
                    buf.iter().take(n + 1).map(|c| scale * c.re).collect()
                }
            }
        };
        SamplePath { grid: self.grid.clone(), values, seed, index, model: self.tag.clone() }
    }

    /// `count` paths with indices `0..count`.
    pub fn sample_batch(&self, count: usize, seed: u64) -> Result<PathBatch> {
        if count == 0 {
            return Err(Error::Invalid("path count must be positive".into()));
        }
        let paths = (0..count as u64).into_par_iter().map(|i| self.sample(seed, i)).collect();
        Ok(PathBatch { grid: self.grid.clone(), paths })
    }
}

fn check_grid(model: &CovarianceModel, grid: &TimeGrid) -> Result<()> {
    let slack = 1e-12 * model.horizon();
    if grid.start() < -slack || grid.horizon() > model.horizon() + slack {
        return Err(Error::Grid(format!(
            "grid [{}, {}] exceeds model horizon {}",
            grid.start(),
            grid.horizon(),
            model.horizon()
        )));
    }
    Ok(())
}

/// `count` independent centered Gaussian paths with the model covariance on `grid`.
pub fn sample_paths(model: &CovarianceModel, grid: Arc<TimeGrid>, count: usize, seed: u64) -> Result<PathBatch> {
    PathSampler::new(model, grid)?.sample_batch(count, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fbm() -> CovarianceModel {
        CovarianceModel::fbm(0.75, 1.0).unwrap()
    }

    #[test]
    fn determinism_and_subset_reproducibility() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap().shared();
        let a = sample_paths(&fbm(), grid.clone(), 10, 42).unwrap();
        let b = sample_paths(&fbm(), grid.clone(), 10, 42).unwrap();
        assert_eq!(a, b);
        let s = PathSampler::new(&fbm(), grid).unwrap();
        assert_eq!(s.sample(42, 7).values, a.paths[7].values);
    }

    #[test]
    fn zero_count_is_an_error() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap().shared();
        assert!(sample_paths(&fbm(), grid, 0, 1).is_err());
    }

    #[test]
    fn method_selection() {
        let grid = TimeGrid::uniform(1.0, 32).unwrap().shared();
        assert_eq!(PathSampler::new(&fbm(), grid.clone()).unwrap().method(), SamplingMethod::CirculantIncrements);
        let irregular = Arc::new(TimeGrid::from_points(vec![0.0, 0.1, 0.35, 0.6, 1.0]).unwrap());
        assert_eq!(PathSampler::new(&fbm(), irregular).unwrap().method(), SamplingMethod::Cholesky);
        let exp = CovarianceModel::stationary_exp(0.75, 1.0).unwrap();
        let s = PathSampler::with_method(&exp, grid, SamplingMethod::Cholesky).unwrap();
        assert_eq!(s.method(), SamplingMethod::Cholesky);
    }

    #[test]
    fn fbm_starts_at_zero_under_cholesky() {
        let grid = TimeGrid::uniform(1.0, 16).unwrap().shared();
        let s = PathSampler::with_method(&fbm(), grid, SamplingMethod::Cholesky).unwrap();
        assert_eq!(s.sample(1, 0).values[0], 0.0);
    }

    #[test]
    fn factorization_failure_reports_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match factor_psd(&m) {
            Err(Error::Factorization { min_eigenvalue }) => assert!((min_eigenvalue + 1.0).abs() < 1e-9),
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn centered_and_unit_variance_at_one() {
        let grid = TimeGrid::uniform(1.0, 256).unwrap().shared();
        let batch = sample_paths(&fbm(), grid, 5000, 11).unwrap();
        let n = batch.len() as f64;
        let last: Vec<f64> = batch.iter().map(|p| p.values[256]).collect();
        let mean = last.iter().sum::<f64>() / n;
        let var = last.iter().map(|x| x * x).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 / n.sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "var {var}");
        for k in [16, 64, 128] {
            let m = batch.iter().map(|p| p.values[k]).sum::<f64>() / n;
            let sd = (k as f64 / 256.0).powf(0.75);
            assert!(m.abs() < 4.0 * sd / n.sqrt());
        }
    }
}
