use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::median;
use crate::error::{Error, Result};
use crate::gp_sim::{CovarianceModel, PathSampler, SamplePath};
use crate::grid::TimeGrid;
use crate::pathwise::{Segment, SegmentRule, StepIntegrand};
use crate::replicate::{
    default_holder_params, default_lemma_params, path_order, replicate_holder, HolderOptions, HolderParams,
    HolderTarget, PartitionSchedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroIntegralConfig {
    pub strike: f64,
    pub cells: usize,
    pub n_max: usize,
    pub count: usize,
    pub seed: u64,
    pub params: HolderParams,
    pub options: HolderOptions,
}

impl ZeroIntegralConfig {
    /// Defaults for a model of exponent `alpha`: `2^13` cells, 30 blocks,
    /// 200 paths, tolerance 0.05.
    pub fn defaults(alpha: f64, strike: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            strike,
            cells: 1 << 13,
            n_max: 30,
            count: 200,
            seed,
            params: default_holder_params(alpha, path_order(alpha))?,
            options: HolderOptions::new(default_lemma_params(alpha)?, 0.05),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroIntegralReport {
    pub strike: f64,
    pub t1: f64,
    /// `|∫u¹dX − ∫u²dX|` per path.
    pub gaps: Vec<f64>,
    /// Time spent by `X` above the strike before `t_1`, per path.
    pub occupations: Vec<f64>,
    pub median_gap: f64,
    pub mean_occupation: f64,
    /// Fraction of paths with `X_T > K`.
    pub in_the_money: f64,
    /// Median gap over those paths.
    pub median_gap_in_the_money: f64,
    /// Fraction of paths whose Hölder replication met its tolerance.
    pub replication_success: f64,
    /// No path exceeds the strike: both integrands vanish.
    pub degenerate: bool,
}

fn sampler_for(model: &CovarianceModel, cells: usize) -> Result<PathSampler> {
    PathSampler::new(model, TimeGrid::uniform(model.horizon(), cells)?.shared())
}

/// `∫1_{X_s > K} dX_s` over the whole grid, in closed form.
fn indicator_integral(x: &SamplePath, strike: f64) -> Result<f64> {
    let mut phi = StepIntegrand::zero(x.grid.clone());
    let last = x.len() - 1;
    phi.push(Segment::new(0, last, SegmentRule::Indicator { level: strike - x.values[0], anchor: 0 }))?;
    phi.closed_form_at(x, last)
}

/// Two adapted integrands for `(X_T − K)^+`: the Hölder replication `u¹`,
/// which vanishes on `[0, t_1]`, and `u² = 1_{X_s > K}`. Their integrals
/// nearly agree while `u²` is nonzero on part of `[0, t_1]`.
pub fn zero_integral_demo(model: &CovarianceModel, cfg: &ZeroIntegralConfig) -> Result<ZeroIntegralReport> {
    if !(cfg.strike >= 0.0) {
        return Err(Error::Invalid(format!("strike must be nonnegative (got {})", cfg.strike)));
    }
    if cfg.count == 0 {
        return Err(Error::Invalid("path count must be positive".into()));
    }
    let sampler = sampler_for(model, cfg.cells)?;
    let grid = sampler.grid().clone();
    let schedule = PartitionSchedule::new(cfg.params.gamma, model.horizon(), cfg.n_max, 1e-10)?;
    let i1 = schedule.grid_indices(&grid)[1];
    let h = grid.step();
    let target = HolderTarget::Call { strike: cfg.strike };
    let rows = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let x = sampler.sample(cfg.seed, i);
            let out = replicate_holder(&target, &x, &cfg.params, &schedule, &cfg.options)?;
            let u2 = indicator_integral(&x, cfg.strike)?;
            let occ = x.values[..i1].iter().filter(|&&v| v > cfg.strike).count() as f64 * h;
            let crossed = x.values.iter().any(|&v| v > cfg.strike);
            Ok(((out.achieved - u2).abs(), occ, out.success, crossed, u2 > 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let occupations: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let n = rows.len() as f64;
    let itm: Vec<f64> = rows.iter().filter(|r| r.4).map(|r| r.0).collect();
    Ok(ZeroIntegralReport {
        in_the_money: itm.len() as f64 / n,
        median_gap_in_the_money: median(&itm),
        strike: cfg.strike,
        t1: grid.points()[i1],
        median_gap: median(&gaps),
        mean_occupation: occupations.iter().sum::<f64>() / n,
        replication_success: rows.iter().filter(|r| r.2).count() as f64 / n,
        degenerate: !rows.iter().any(|r| r.3),
        gaps,
        occupations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FouReport {
    pub theta: f64,
    pub t1: f64,
    /// `|Σ e^{−θ(T−s_i)} ΔX_i − ∫Ψ dX|` per path.
    pub gaps: Vec<f64>,
    pub median_gap: f64,
    /// Mean over paths of `∫_0^{t_1} |e^{−θ(T−s)} − Ψ(s)| ds`.
    pub integrand_difference: f64,
}

/// The Ornstein–Uhlenbeck endpoint `U_T = ∫_0^T e^{−θ(T−s)} dX_s` as a forward
/// sum, against its Hölder replication driven by `Z_t = ∫_0^t e^{−θ(T−s)} dX_s`.
pub fn fou_companion(model: &CovarianceModel, theta: f64, cfg: &ZeroIntegralConfig) -> Result<FouReport> {
    if !(theta > 0.0) {
        return Err(Error::Window(format!("θ > 0 (got {theta})")));
    }
    let sampler = sampler_for(model, cfg.cells)?;
    let grid = sampler.grid().clone();
    let horizon = model.horizon();
    let schedule = PartitionSchedule::new(cfg.params.gamma, horizon, cfg.n_max, 1e-10)?;
    let i1 = schedule.grid_indices(&grid)[1];
    let times = grid.points();
    let h = grid.step();
    let weight: Vec<f64> = times.iter().map(|&s| (-theta * (horizon - s)).exp()).collect();
    let rows = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| {
            let x = sampler.sample(cfg.seed, i);
            let mut z = Vec::with_capacity(x.len());
            let mut acc = 0.0;
            z.push(0.0);
            for (w, v) in weight.iter().zip(x.values.windows(2)) {
                acc += w * (v[1] - v[0]);
                z.push(acc);
            }
            let out =
                replicate_holder(&HolderTarget::Auxiliary { values: z }, &x, &cfg.params, &schedule, &cfg.options)?;
            let psi = out.integrand.values(&x)?;
            let diff: f64 = (0..i1).map(|k| (weight[k] - psi[k]).abs() * h).sum();
            Ok(((out.achieved - acc).abs(), diff))
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(FouReport {
        theta,
        t1: times[i1],
        median_gap: median(&gaps),
        integrand_difference: rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(strike: f64) -> ZeroIntegralConfig {
        let mut c = ZeroIntegralConfig::defaults(0.75, strike, 5).unwrap();
        c.cells = 1 << 10;
        c.n_max = 8;
        c.count = 8;
        c
    }

    #[test]
    fn unreachable_strike_is_degenerate() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let r = zero_integral_demo(&m, &small_cfg(50.0)).unwrap();
        assert!(r.degenerate);
        assert!(r.gaps.iter().all(|&g| g == 0.0));
        assert_eq!(r.mean_occupation, 0.0);
    }

    #[test]
    fn indicator_integral_is_call_payoff() {
        let g = TimeGrid::uniform(1.0, 4).unwrap().shared();
        let x = SamplePath::from_values(g, vec![0.0, 0.3, -0.1, 0.5, 0.4], "t").unwrap();
        assert!((indicator_integral(&x, 0.2).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fou_integrands_differ_before_first_block() {
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let r = fou_companion(&m, 1.0, &small_cfg(0.0)).unwrap();
        // Ψ vanishes on [0, t_1] while the kernel weight does not
        let expect = ((-1.0 + r.t1) as f64).exp() - (-1.0f64).exp();
        assert!((r.integrand_difference - expect).abs() < 1e-2 * expect);
    }
}
