use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

type LagFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Covariance family of a centered Gaussian process.
#[derive(Clone)]
pub enum Kernel {
    /// Fractional Brownian motion, `R(t,s) = ½(t^{2H} + s^{2H} − |t−s|^{2H})`.
    Fbm { hurst: f64 },
    /// Stationary process with `r(t) = exp(−|t|^{2α})`.
    StationaryExp { alpha: f64 },
    /// Stationary process with a user supplied autocovariance `r`.
    StationaryGeneric { r: LagFn, label: String },
    /// Arbitrary covariance kernel `R(t,s)`.
    Generic { kernel: KernelFn, label: String },
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Fbm { hurst } => write!(f, "Fbm {{ hurst: {hurst} }}"),
            Kernel::StationaryExp { alpha } => write!(f, "StationaryExp {{ alpha: {alpha} }}"),
            Kernel::StationaryGeneric { label, .. } => write!(f, "StationaryGeneric({label})"),
            Kernel::Generic { label, .. } => write!(f, "Generic({label})"),
        }
    }
}

/// How the covariance depends on its arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    StationaryIncrements,
    Stationary,
    General,
}

/// A centered Gaussian law on `[0, T]` together with the Hölder-class
/// exponent `α` it is meant to represent.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    kernel: Kernel,
    alpha: f64,
    horizon: f64,
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Window(format!("0 < {name} < 1 (got {v})")))
    }
}

impl CovarianceModel {
    /// fBm with Hurst index `hurst`; the class exponent defaults to `hurst`.
    pub fn fbm(hurst: f64, horizon: f64) -> Result<Self> {
        check_unit_open("H", hurst)?;
        Self::new(Kernel::Fbm { hurst }, hurst, horizon)
    }

    pub fn stationary_exp(alpha: f64, horizon: f64) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        Self::new(Kernel::StationaryExp { alpha }, alpha, horizon)
    }

    /// Stationary model from a tabulated autocovariance `(lag, r(lag))`,
    /// linearly interpolated and held constant past the last lag.
    pub fn tabulated(lags: Vec<f64>, values: Vec<f64>, alpha: f64, horizon: f64) -> Result<Self> {
        if lags.len() != values.len() || lags.len() < 2 {
            return Err(Error::Invalid("tabulated kernel needs ≥ 2 (lag, r) pairs".into()));
        }
        if lags[0] != 0.0 || lags.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("tabulated lags must start at 0 and increase".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("tabulated kernel has non-finite values".into()));
        }
        let label = format!("tabulated({} lags)", lags.len());
        let r: LagFn = Arc::new(move |x: f64| {
            let x = x.abs();
            let hi = lags.partition_point(|&l| l < x);
            if hi == 0 {
                return values[0];
            }
            if hi >= lags.len() {
                return values[values.len() - 1];
            }
            let (l0, l1) = (lags[hi - 1], lags[hi]);
            let w = (x - l0) / (l1 - l0);
            values[hi - 1] * (1.0 - w) + values[hi] * w
        });
        Self::new(Kernel::StationaryGeneric { r, label }, alpha, horizon)
    }

    pub fn new(kernel: Kernel, alpha: f64, horizon: f64) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Invalid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { kernel, alpha, horizon })
    }

    /// Same kernel with a different class exponent (e.g. testing fBm(½) against α = ¾).
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_unit_open("alpha", alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn structure(&self) -> Structure {
        match self.kernel {
            Kernel::Fbm { .. } => Structure::StationaryIncrements,
            Kernel::StationaryExp { .. } | Kernel::StationaryGeneric { .. } => Structure::Stationary,
            Kernel::Generic { .. } => Structure::General,
        }
    }

    pub fn tag(&self) -> String {
        match &self.kernel {
            Kernel::Fbm { hurst } => format!("fbm(H={hurst})"),
            Kernel::StationaryExp { alpha } => format!("stationary-exp(alpha={alpha})"),
            Kernel::StationaryGeneric { label, .. } => format!("stationary({label})"),
            Kernel::Generic { label, .. } => format!("generic({label})"),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.horizon;
        if t >= -slack && t <= self.horizon + slack {
            Ok(())
        } else {
            Err(Error::OutOfDomain { t, horizon: self.horizon })
        }
    }

    /// `R_X(t, s)`.
    pub fn covariance(&self, t: f64, s: f64) -> Result<f64> {
        self.check_time(t)?;
        self.check_time(s)?;
        Ok(self.cov(t, s))
    }

    /// `W_X(t, s) = E(X_t − X_s)²`.
    pub fn incremental_variance(&self, t: f64, s: f64) -> Result<f64> {
        self.check_time(t)?;
        self.check_time(s)?;
        Ok(self.incr_var(t, s))
    }

    /// `V_X(t) = R_X(t, t)`.
    pub fn variance(&self, t: f64) -> Result<f64> {
        self.covariance(t, t)
    }

    /// Unchecked covariance; symmetric by construction.
    pub(crate) fn cov(&self, t: f64, s: f64) -> f64 {
        match &self.kernel {
            Kernel::Fbm { hurst } => {
                let h2 = 2.0 * hurst;
                0.5 * (t.abs().powf(h2) + s.abs().powf(h2) - (t - s).abs().powf(h2))
            }
            Kernel::StationaryExp { alpha } => (-(t - s).abs().powf(2.0 * alpha)).exp(),
            Kernel::StationaryGeneric { r, .. } => r((t - s).abs()),
            Kernel::Generic { kernel, .. } => {
                // evaluate in a fixed argument order so R(t,s) == R(s,t) bit-exactly
                if t <= s {
                    kernel(t, s)
                } else {
                    kernel(s, t)
                }
            }
        }
    }

    pub(crate) fn incr_var(&self, t: f64, s: f64) -> f64 {
        if t == s {
            return 0.0;
        }
        match self.lag_variance_fn() {
            Some(w) => w((t - s).abs()),
            None => {
                let v = self.cov(t, t) + self.cov(s, s) - 2.0 * self.cov(t, s);
                v.max(0.0)
            }
        }
    }

    /// `x ↦ W(0, x)` for models whose incremental variance depends on the lag only.
    pub fn lag_variance_fn(&self) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync + '_>> {
        match &self.kernel {
            Kernel::Fbm { hurst } => {
                let h2 = 2.0 * hurst;
                Some(Box::new(move |x: f64| x.abs().powf(h2)))
            }
            Kernel::StationaryExp { alpha } => {
                let a2 = 2.0 * alpha;
                Some(Box::new(move |x: f64| -2.0 * (-(x.abs().powf(a2))).exp_m1()))
            }
            Kernel::StationaryGeneric { r, .. } => {
                let r0 = r(0.0);
                Some(Box::new(move |x: f64| 2.0 * (r0 - r(x.abs()))))
            }
            Kernel::Generic { .. } => None,
        }
    }

    /// Covariance matrix at the given times.
    pub fn covariance_matrix(&self, times: &[f64]) -> DMatrix<f64> {
        let n = times.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.cov(times[i], times[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_covariances() {
        let e = CovarianceModel::stationary_exp(0.75, 1.0).unwrap();
        assert_eq!(e.covariance(1.0, 1.0).unwrap(), 1.0);
        let f = CovarianceModel::fbm(0.75, 2.0).unwrap();
        assert_eq!(f.covariance(1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn fbm_half_sum_formula() {
        // ½(2^{1.5} + 1 − 1) = √2
        let f = CovarianceModel::fbm(0.75, 2.0).unwrap();
        let v = f.covariance(2.0, 1.0).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn incremental_variance_examples() {
        let f = CovarianceModel::fbm(0.75, 1.0).unwrap();
        assert_eq!(f.incremental_variance(0.3, 0.3).unwrap(), 0.0);
        let w = f.incremental_variance(1.0, 0.5).unwrap();
        assert!((w - 0.5f64.powf(1.5)).abs() < 1e-12);
        // agrees with V(t) + V(s) − 2R(t,s)
        let alt = f.cov(1.0, 1.0) + f.cov(0.5, 0.5) - 2.0 * f.cov(1.0, 0.5);
        assert!((w - alt).abs() < 1e-12);

        let e = CovarianceModel::stationary_exp(0.75, 1.0).unwrap();
        let w = e.incremental_variance(0.6, 0.5).unwrap();
        let expected = 2.0 * (1.0 - (-(0.1f64.powf(1.5))).exp());
        assert!((w - expected).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let f = CovarianceModel::fbm(0.75, 1.0).unwrap();
        assert!(matches!(f.covariance(1.5, 0.2), Err(Error::OutOfDomain { .. })));
        assert!(f.covariance(-0.1, 0.2).is_err());
        assert!(CovarianceModel::fbm(1.2, 1.0).is_err());
        assert!(CovarianceModel::stationary_exp(0.75, 0.0).is_err());
    }

    #[test]
    fn tabulated_matches_interpolation() {
        let m = CovarianceModel::tabulated(vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 0.25], 0.75, 1.0).unwrap();
        assert!((m.covariance(0.75, 0.5).unwrap() - 0.75).abs() < 1e-12);
        assert!((m.covariance(1.0, 0.0).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(m.structure(), Structure::Stationary);
    }

    #[test]
    fn generic_kernel_is_symmetric() {
        let k: KernelFn = Arc::new(|t: f64, s: f64| t.min(s) + 0.1 * t * s);
        let m = CovarianceModel::new(Kernel::Generic { kernel: k, label: "bm+".into() }, 0.6, 1.0).unwrap();
        assert_eq!(m.cov(0.3, 0.7), m.cov(0.7, 0.3));
        assert!(m.lag_variance_fn().is_none());
    }
}
