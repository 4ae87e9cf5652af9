//! Monte Carlo checks: small-ball decay, the crossing bound,
//! Kolmogorov–Smirnov fits and the zero-integral demonstration.

mod crossing;
mod ks;
mod smallball;
mod zero;

pub use crossing::{crossing_check, crossing_sweep, CrossingReport, CrossingSweep, SYMMETRY_Z};
pub use ks::{kolmogorov_survival, ks_test, KsResult, KS_MIN_SAMPLES};
pub use smallball::{
    smallball_estimate, smallball_shape, smallball_shape_check, smallball_sweep, ShapeCheck, SmallBallShape,
    SHAPE_MIN_SUCCESSES,
};
pub use zero::{fou_companion, zero_integral_demo, FouReport, ZeroIntegralConfig, ZeroIntegralReport};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// A Monte Carlo estimate with a two-sided normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub std_error: f64,
    pub count: usize,
    pub confidence: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Two-sided normal quantile for `confidence`.
pub(crate) fn z_value(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * confidence)
}

impl EstimateWithCI {
    /// Binomial proportion. With no successes the upper end is the exact
    /// one-sided bound `1 − (1 − confidence)^{1/count}`, likewise mirrored for
    /// all successes.
    pub fn proportion(successes: usize, count: usize, confidence: f64) -> Self {
        assert!(count > 0, "empty sample");
        let n = count as f64;
        let p = successes as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        let z = z_value(confidence);
        let exact = 1.0 - (1.0 - confidence).powf(1.0 / n);
        let (lower, upper) = if successes == 0 {
            (0.0, exact)
        } else if successes == count {
            (1.0 - exact, 1.0)
        } else {
            ((p - z * se).max(0.0), (p + z * se).min(1.0))
        };
        Self { estimate: p, std_error: se, count, confidence, lower, upper }
    }

    /// Sample mean with `sd/√count` standard error.
    pub fn mean(samples: &[f64], confidence: f64) -> Self {
        assert!(!samples.is_empty(), "empty sample");
        let n = samples.len() as f64;
        let m = samples.iter().sum::<f64>() / n;
        let var =
            if samples.len() > 1 { samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let se = (var / n).sqrt();
        let z = z_value(confidence);
        Self { estimate: m, std_error: se, count: samples.len(), confidence, lower: m - z * se, upper: m + z * se }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// Least squares fit `y = a + b x` with the slope's standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn t_stat(&self) -> f64 {
        self.slope / self.slope_se
    }
}

pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    Some(LinearFit { intercept, slope, slope_se, points: n })
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportion_interval_contains_estimate() {
        for (k, n) in [(0, 10), (3, 10), (10, 10), (500, 1000)] {
            let e = EstimateWithCI::proportion(k, n, 0.95);
            assert!(e.contains(e.estimate));
            assert!(e.lower >= 0.0 && e.upper <= 1.0);
        }
        let e = EstimateWithCI::proportion(0, 100, 0.95);
        assert!((e.upper - (1.0 - 0.05f64.powf(0.01))).abs() < 1e-15);
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn z_quantiles() {
        assert!((z_value(0.95) - 1.959_963_985).abs() < 1e-8);
        assert!((median(&[3.0, 1.0, 2.0, 4.0]) - 2.5).abs() < 1e-15);
    }
}
