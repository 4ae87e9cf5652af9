use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible width of a parameter window.
pub const WINDOW_GUARD: f64 = 1e-6;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.5 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Window(format!("1/2 < α < 1 (got α = {alpha})")))
    }
}

/// Exponents of the diverging integrand: `γ ∈ (1, 1/α)`, `η ∈ (0, 1/(γα) − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl LemmaParams {
    pub fn new(alpha: f64, gamma: f64, eta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(gamma > 1.0 && gamma < 1.0 / alpha) {
            return Err(Error::Window(format!("1 < γ < 1/α = {} (got γ = {gamma})", 1.0 / alpha)));
        }
        let eta_hi = 1.0 / (gamma * alpha) - 1.0;
        if !(eta > 0.0 && eta < eta_hi) {
            return Err(Error::Window(format!("0 < η < 1/(γα) − 1 = {eta_hi} (got η = {eta})")));
        }
        Ok(Self { alpha, gamma, eta })
    }

    /// `γα(1 + η)`, which must stay below 1.
    pub fn exponent(&self) -> f64 {
        self.gamma * self.alpha * (1.0 + self.eta)
    }
}

/// Midpoints: `γ` of `(1, 1/α)`, then `η` of `(0, 1/(γα) − 1)`.
pub fn default_lemma_params(alpha: f64) -> Result<LemmaParams> {
    check_alpha(alpha)?;
    let width = 1.0 / alpha - 1.0;
    if width < 1e-3 {
        return Err(Error::Window(format!("1 < γ < 1/α: window width {width:.2e} below 1e-3")));
    }
    let gamma = 0.5 * (1.0 + 1.0 / alpha);
    let eta = 0.5 * (1.0 / (gamma * alpha) - 1.0);
    LemmaParams::new(alpha, gamma, eta)
}

/// Parameters of the proper replication of a Hölder endpoint of order `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderParams {
    pub alpha: f64,
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    /// Lower variance exponent `E[X_{s+Δ} − X_s]² ≥ CΔ^{2θ}`; 1 unless declared.
    pub theta: f64,
}

impl HolderParams {
    /// Lower end of the admissible `a` (and `β`) range: `θ − α`, which is
    /// `1 − α` for the default `θ = 1`.
    pub fn lower_order(alpha: f64, theta: f64) -> f64 {
        theta - alpha
    }

    pub fn kappa_window(&self) -> (f64, f64) {
        (self.gamma * (self.alpha - self.a), self.gamma * (self.alpha - self.beta) - 1.0)
    }

    pub fn new(alpha: f64, a: f64, beta: f64, gamma: f64, kappa: f64, theta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Window(format!("0 < θ ≤ 1 (got θ = {theta})")));
        }
        let lo = Self::lower_order(alpha, theta);
        if !(a > lo && a < alpha) {
            return Err(Error::Window(format!("{lo} < a < α = {alpha} (got a = {a})")));
        }
        let b_hi = a.min(0.5);
        if !(beta > lo && beta < b_hi) {
            return Err(Error::Window(format!("{lo} < β < min(a, 1/2) = {b_hi} (got β = {beta})")));
        }
        let g_lo = (1.0 / (a - beta)).max(1.0);
        if !(gamma > g_lo) {
            return Err(Error::Window(format!("γ > max(1/(a − β), 1) = {g_lo} (got γ = {gamma})")));
        }
        let p = Self { alpha, a, beta, gamma, kappa, theta };
        let (k_lo, k_hi) = p.kappa_window();
        if !(kappa > k_lo && kappa < k_hi) {
            return Err(Error::Window(format!("γ(α − a) = {k_lo} < κ < γ(α − β) − 1 = {k_hi} (got κ = {kappa})")));
        }
        Ok(p)
    }
}

/// Hölder order used for targets built from the path itself: `α − 0.05`,
/// pulled toward the middle of `(1 − α, α)` when that window is narrow.
pub fn path_order(alpha: f64) -> f64 {
    alpha - (0.05f64).min(0.25 * (2.0 * alpha - 1.0))
}

/// Midpoint defaults with `θ = 1`.
pub fn default_holder_params(alpha: f64, a: f64) -> Result<HolderParams> {
    default_holder_params_with_theta(alpha, a, 1.0)
}

/// `β` = midpoint of `(θ − α, min(a, 1/2))`, `γ = max(1/(a − β), 1) + 1`,
/// `κ` = midpoint of `(γ(α − a), γ(α − β) − 1)`.
pub fn default_holder_params_with_theta(alpha: f64, a: f64, theta: f64) -> Result<HolderParams> {
    check_alpha(alpha)?;
    let lo = HolderParams::lower_order(alpha, theta);
    if !(a < alpha) {
        return Err(Error::Window(format!("a < α = {alpha} (got a = {a})")));
    }
    let b_hi = a.min(0.5);
    if !(a > lo) || b_hi - lo < WINDOW_GUARD {
        return Err(Error::Window(format!(
            "a > {lo} with β window ({lo}, {b_hi}) wider than {WINDOW_GUARD:e} (got a = {a})"
        )));
    }
    let beta = 0.5 * (lo + b_hi);
    let gamma = (1.0 / (a - beta)).max(1.0) + 1.0;
    let k_lo = gamma * (alpha - a);
    let k_hi = gamma * (alpha - beta) - 1.0;
    if k_hi - k_lo < WINDOW_GUARD {
        return Err(Error::Window(format!("κ window ({k_lo}, {k_hi}) is empty")));
    }
    HolderParams::new(alpha, a, beta, gamma, 0.5 * (k_lo + k_hi), theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_defaults_three_quarters() {
        let p = default_lemma_params(0.75).unwrap();
        assert!((p.gamma - 7.0 / 6.0).abs() < 1e-15);
        assert!((p.eta - 1.0 / 14.0).abs() < 1e-15);
        assert!(p.exponent() < 1.0);
    }

    #[test]
    fn lemma_window_collapses() {
        assert!(default_lemma_params(0.9995).unwrap_err().is_window());
        assert!(default_lemma_params(0.5).unwrap_err().is_window());
    }

    #[test]
    fn holder_defaults_example() {
        let p = default_holder_params(0.75, 0.6).unwrap();
        assert!((p.beta - 0.375).abs() < 1e-15);
        assert!((p.gamma - (1.0 / 0.225 + 1.0)).abs() < 1e-12);
        let (lo, hi) = p.kappa_window();
        assert!((lo - 0.816_666_666_666_7).abs() < 1e-9);
        assert!((hi - 1.041_666_666_666_7).abs() < 1e-9);
        assert!((p.kappa - 0.929_166_666_666_7).abs() < 1e-9);
    }

    #[test]
    fn path_order_inside_window() {
        for a in [0.51, 0.6, 0.75, 0.99] {
            let o = path_order(a);
            assert!(o > 1.0 - a && o < a);
            assert!(default_holder_params(a, o).is_ok());
        }
        assert!((path_order(0.75) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn holder_guard() {
        assert!(default_holder_params(0.75, 0.25 + 1e-9).unwrap_err().is_window());
        assert!(default_holder_params(0.75, 0.2).unwrap_err().is_window());
        assert!(default_holder_params(0.75, 0.8).unwrap_err().is_window());
    }

    #[test]
    fn theta_relaxes_lower_end() {
        assert!(default_holder_params(0.75, 0.2).is_err());
        let p = default_holder_params_with_theta(0.75, 0.2, 0.9).unwrap();
        assert!(p.beta > 0.15 && p.beta < 0.2);
    }
}
