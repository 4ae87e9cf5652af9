use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp_sim::sampler::factor_psd;
use crate::gp_sim::CovarianceModel;
use crate::grid::TimeGrid;

/// Gauss–Hermite nodes per dimension.
pub const HERMITE_NODES: usize = 64;
/// Largest number of grid observations conditioned on.
pub const MAX_OBSERVATIONS: usize = 512;
/// `|E[arctan ξ | F_t]|` is clipped to `π/2 − ARCTAN_CLIP` before `tan`.
pub const ARCTAN_CLIP: f64 = 1e-6;

/// A random variable `ξ = h(X_{s_1}, …, X_{s_m})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiSpec {
    Constant {
        value: f64,
    },
    /// `intercept + Σ w_i X_{s_i}`.
    Linear {
        times: Vec<f64>,
        weights: Vec<f64>,
        intercept: f64,
    },
    /// `(X_s − K)^+`.
    Call {
        time: f64,
        strike: f64,
    },
    /// `Π tanh(w_i X_{s_i})`, at most two factors.
    Tanh {
        times: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl XiSpec {
    pub fn times(&self) -> Vec<f64> {
        match self {
            XiSpec::Constant { .. } => vec![],
            XiSpec::Linear { times, .. } | XiSpec::Tanh { times, .. } => times.clone(),
            XiSpec::Call { time, .. } => vec![*time],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            XiSpec::Linear { times, weights, .. } if times.len() != weights.len() => {
                Err(Error::Invalid("linear target needs one weight per time".into()))
            }
            XiSpec::Tanh { times, weights } if times.len() != weights.len() || times.is_empty() || times.len() > 2 => {
                Err(Error::Unsupported("tanh target needs one or two (time, weight) pairs".into()))
            }
            _ => Ok(()),
        }
    }

    /// `h` at the coordinates `X_{s_1}, …, X_{s_m}`.
    pub fn h(&self, x: &[f64]) -> f64 {
        match self {
            XiSpec::Constant { value } => *value,
            XiSpec::Linear { weights, intercept, .. } => {
                intercept + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            }
            XiSpec::Call { strike, .. } => (x[0] - strike).max(0.0),
            XiSpec::Tanh { weights, .. } => weights.iter().zip(x).map(|(w, v)| (w * v).tanh()).product(),
        }
    }

    /// Realized `ξ` on a path sampled on `grid`.
    pub fn evaluate(&self, grid: &TimeGrid, values: &[f64]) -> Result<f64> {
        let idx = self.indices(grid)?;
        let xs: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        Ok(self.h(&xs))
    }

    fn indices(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        self.times()
            .iter()
            .map(|&s| grid.index_of(s).ok_or_else(|| Error::Invalid(format!("target time {s} is not a grid point"))))
            .collect()
    }
}

/// Probabilists' Gauss–Hermite rule: `E f(Z) ≈ Σ w_k f(z_k)`, `Z ~ N(0,1)`.
fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = HERMITE_NODES;
        // Golub–Welsch on the Jacobi matrix of the physicists' polynomials
        let mut j = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            j[(k, k - 1)] = b;
            j[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k] * std::f64::consts::SQRT_2, v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    })
}

/// Conditional law of the unobserved coordinates given grid observations up to one index.
struct Kriging {
    obs: Vec<usize>,
    /// `K_uo K_oo^{-1}` (rows: unobserved coordinates).
    weights: DMatrix<f64>,
    /// Lower Cholesky factor of the conditional covariance.
    chol: DMatrix<f64>,
}

/// Evaluates `tan E[arctan ξ | grid observations up to t]` along paths.
pub struct ConditionalArctan {
    model: CovarianceModel,
    grid: Arc<TimeGrid>,
    spec: XiSpec,
    coords: Vec<usize>,
    cache: RwLock<HashMap<usize, Arc<Kriging>>>,
}

impl ConditionalArctan {
    pub fn new(model: &CovarianceModel, grid: Arc<TimeGrid>, spec: &XiSpec) -> Result<Self> {
        spec.validate()?;
        let coords = spec.indices(&grid)?;
        Ok(Self { model: model.clone(), grid, spec: spec.clone(), coords, cache: RwLock::new(HashMap::new()) })
    }

    fn kriging(&self, j: usize) -> Result<Arc<Kriging>> {
        if let Some(k) = self.cache.read().unwrap().get(&j) {
            return Ok(k.clone());
        }
        let t = self.grid.points();
        let unobs: Vec<usize> = self.coords.iter().copied().filter(|&i| i > j).collect();
        let scale = (0..=j).map(|i| self.model.cov(t[i], t[i])).fold(0.0, f64::max);
        let stride = (j + 1).div_ceil(MAX_OBSERVATIONS).max(1);
        let mut obs: Vec<usize> = (0..=j).rev().step_by(stride).collect();
        obs.extend(self.coords.iter().copied().filter(|&i| i <= j));
        obs.sort_unstable();
        obs.dedup();
        obs.retain(|&i| self.model.cov(t[i], t[i]) > 1e-14 * scale.max(f64::MIN_POSITIVE));

        let m = unobs.len();
        let times_o: Vec<f64> = obs.iter().map(|&i| t[i]).collect();
        let k_uu = DMatrix::from_fn(m, m, |a, b| self.model.cov(t[unobs[a]], t[unobs[b]]));
        let (weights, cond) = if obs.is_empty() {
            (DMatrix::zeros(m, 0), k_uu)
        } else {
            let k_oo = self.model.covariance_matrix(&times_o);
            let k_ou = DMatrix::from_fn(obs.len(), m, |a, b| self.model.cov(t[obs[a]], t[unobs[b]]));
            let (chol, _) = factor_psd(&k_oo)?;
            let sol = chol.solve(&k_ou);
            let cond = &k_uu - k_ou.transpose() * &sol;
            (sol.transpose(), cond)
        };
        let cond = 0.5 * (&cond + cond.transpose());
        let chol = if m == 0 { DMatrix::zeros(0, 0) } else { psd_sqrt(&cond)? };
        let k = Arc::new(Kriging { obs, weights, chol });
        self.cache.write().unwrap().insert(j, k.clone());
        Ok(k)
    }

    /// `E[arctan ξ | X_{u_0}, …, X_{u_j}]` for the observed prefix of `values`.
    pub fn expectation(&self, values: &[f64], j: usize) -> Result<f64> {
        let t_max = self.coords.iter().copied().max();
        if t_max.is_none_or(|m| m <= j) {
            let xs: Vec<f64> = self.coords.iter().map(|&i| values[i]).collect();
            return Ok(self.spec.h(&xs).atan());
        }
        let k = self.kriging(j)?;
        let xo = DVector::from_iterator(k.obs.len(), k.obs.iter().map(|&i| values[i]));
        let mean = &k.weights * xo;
        let m = mean.len();
        // assemble h's arguments: known coordinates first, unknown filled per node
        let mut slots: Vec<Option<usize>> = Vec::with_capacity(self.coords.len());
        let mut known = vec![0.0; self.coords.len()];
        let mut u = 0;
        for (c, &i) in self.coords.iter().enumerate() {
            if i <= j {
                known[c] = values[i];
                slots.push(None);
            } else {
                slots.push(Some(u));
                u += 1;
            }
        }
        let (z, w) = hermite_rule();
        if let XiSpec::Linear { weights, intercept, .. } = &self.spec {
            // the combination is Gaussian: one dimension suffices
            let mut mu = *intercept;
            let mut lw = DVector::zeros(m);
            for (c, slot) in slots.iter().enumerate() {
                match slot {
                    None => mu += weights[c] * known[c],
                    Some(u) => {
                        mu += weights[c] * mean[*u];
                        lw[*u] = weights[c];
                    }
                }
            }
            let sd = (k.chol.transpose() * &lw).norm();
            return Ok(z.iter().zip(w).map(|(zk, wk)| wk * (mu + sd * zk).atan()).sum());
        }
        if m > 2 {
            return Err(Error::Unsupported(format!("quadrature over {m} unobserved coordinates")));
        }
        let mut args = known.clone();
        let mut fill = |e: &[f64]| {
            for (c, slot) in slots.iter().enumerate() {
                if let Some(u) = slot {
                    let mut v = mean[*u];
                    for (q, eq) in e.iter().enumerate() {
                        v += k.chol[(*u, q)] * eq;
                    }
                    args[c] = v;
                }
            }
            self.spec.h(&args).atan()
        };
        Ok(if m == 1 {
            z.iter().zip(w).map(|(zk, wk)| wk * fill(&[*zk])).sum()
        } else {
            let mut acc = 0.0;
            for (za, wa) in z.iter().zip(w) {
                for (zb, wb) in z.iter().zip(w) {
                    acc += wa * wb * fill(&[*za, *zb]);
                }
            }
            acc
        })
    }

    /// `tan` of the clipped conditional expectation.
    pub fn value(&self, values: &[f64], j: usize) -> Result<f64> {
        let e = self.expectation(values, j)?;
        let lim = std::f64::consts::FRAC_PI_2 - ARCTAN_CLIP;
        Ok(e.clamp(-lim, lim).tan())
    }

    /// Realized `ξ` on the full path.
    pub fn realized(&self, values: &[f64]) -> f64 {
        let xs: Vec<f64> = self.coords.iter().map(|&i| values[i]).collect();
        self.spec.h(&xs)
    }

    /// Grid index observed at time `t` (the last grid point not after `t`).
    pub fn observed_index(&self, t: f64) -> usize {
        let p = self.grid.points();
        let i = self.grid.nearest_index(t);
        if p[i] > t + 1e-12 && i > 0 {
            i - 1
        } else {
            i
        }
    }
}

/// Lower-triangular square root of a small PSD matrix (zero directions kept at zero).
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    if min < -1e-8 * scale {
        return Err(Error::Factorization { min_eigenvalue: min });
    }
    if n == 1 {
        return Ok(DMatrix::from_element(1, 1, m[(0, 0)].max(0.0).sqrt()));
    }
    let l11 = m[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { m[(1, 0)] / l11 } else { 0.0 };
    let l22 = (m[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Ok(DMatrix::from_row_slice(2, 2, &[l11, 0.0, l21, l22]))
}

/// `E[arctan ξ | X_u, u ≤ t on the grid]` for one path.
pub fn conditional_expectation_arctan(
    spec: &XiSpec,
    model: &CovarianceModel,
    grid: Arc<TimeGrid>,
    values: &[f64],
    t: f64,
) -> Result<f64> {
    let c = ConditionalArctan::new(model, grid, spec)?;
    let j = c.observed_index(t);
    c.expectation(values, j)
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::gp_sim::PathSampler;
    use crate::rng;

    #[test]
    fn hermite_rule_moments() {
        let (z, w) = hermite_rule();
        let m0: f64 = w.iter().sum();
        let m2: f64 = z.iter().zip(w).map(|(z, w)| w * z * z).sum();
        let m4: f64 = z.iter().zip(w).map(|(z, w)| w * z.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m2 - 1.0).abs() < 1e-10);
        assert!((m4 - 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_target() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let g = TimeGrid::uniform(1.0, 64).unwrap().shared();
        let v = vec![0.3; 65];
        let spec = XiSpec::Constant { value: 2.0 };
        for t in [0.0, 0.5, 1.0] {
            let e = conditional_expectation_arctan(&spec, &m, g.clone(), &v, t).unwrap();
            assert!((e - 2f64.atan()).abs() < 1e-15);
        }
    }

    #[test]
    fn measurable_after_last_time() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let g = TimeGrid::uniform(1.0, 64).unwrap().shared();
        let p = PathSampler::new(&m, g.clone()).unwrap().sample(3, 0);
        let spec = XiSpec::Call { time: 0.5, strike: 0.1 };
        let e = conditional_expectation_arctan(&spec, &m, g, &p.values, 0.75).unwrap();
        assert_eq!(e, (p.values[32] - 0.1).max(0.0).atan());
    }

    #[test]
    fn endpoint_given_half_matches_monte_carlo() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let g = TimeGrid::uniform(1.0, 64).unwrap().shared();
        let p = PathSampler::new(&m, g.clone()).unwrap().sample(11, 0);
        let spec = XiSpec::Linear { times: vec![1.0], weights: vec![1.0], intercept: 0.0 };
        let e = conditional_expectation_arctan(&spec, &m, g.clone(), &p.values, 0.5).unwrap();

        // oracle: conditional mean/variance by a direct dense solve, then sampling
        let t = g.points();
        let obs: Vec<f64> = t[1..=32].to_vec();
        let k_oo = m.covariance_matrix(&obs);
        let k_ou = DVector::from_iterator(32, obs.iter().map(|&s| m.cov(s, 1.0)));
        let sol = k_oo.lu().solve(&k_ou).unwrap();
        let xo = DVector::from_iterator(32, p.values[1..=32].iter().copied());
        let mu = sol.dot(&xo);
        let sd = (1.0 - sol.dot(&k_ou)).sqrt();
        let mut r = rng::stream(99, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| (mu + sd * r.sample::<f64, _>(StandardNormal)).atan()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((e - mean).abs() < 3.0 * se, "{e} vs {mean} ± {se}");
    }

    #[test]
    fn two_dimensional_tanh() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let g = TimeGrid::uniform(1.0, 32).unwrap().shared();
        let v = vec![0.0; 33];
        let spec = XiSpec::Tanh { times: vec![0.75, 1.0], weights: vec![1.0, 2.0] };
        let e = conditional_expectation_arctan(&spec, &m, g, &v, 0.25).unwrap();
        assert!(e.is_finite() && e.abs() < std::f64::consts::FRAC_PI_2);
    }
}
