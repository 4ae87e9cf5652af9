use serde::Serialize;

use crate::error::{Error, Result};

pub const KS_MIN_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    /// `sup |F_n − F|`.
    pub d: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
    pub n: usize,
}

/// `P(K > λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let n = samples.len();
    if n < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples { need: KS_MIN_SAMPLES, got: n });
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Invalid("NaN sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in s.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let d = d.clamp(0.0, 1.0);
    let sq = nf.sqrt();
    let p_value = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
    Ok(KsResult { d, p_value, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicate::TargetDistribution;

    #[test]
    fn point_mass_against_normal() {
        let z = vec![0.0; 100];
        let nrm = TargetDistribution::standard_normal();
        let r = ks_test(&z, |x| nrm.cdf(x)).unwrap();
        assert!((r.d - 0.5).abs() < 1e-15);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn too_few() {
        assert!(matches!(ks_test(&[0.5; 10], |x| x), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn survival_known_value() {
        // P(K > 1.36) ≈ 0.049
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn invariant_under_monotone_maps() {
        let u: Vec<f64> = (0..200).map(|i| ((i * 37 % 200) as f64 + 0.3) / 200.5).collect();
        let base = ks_test(&u, |x| x).unwrap().d;
        let logit: Vec<f64> = u.iter().map(|p| (p / (1.0 - p)).ln()).collect();
        let d = ks_test(&logit, |x| 1.0 / (1.0 + (-x).exp())).unwrap().d;
        assert!((d - base).abs() < 1e-12);
    }
}
