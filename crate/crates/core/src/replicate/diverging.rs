use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::outcome::{BlockCase, BlockRecord, ReplicationOutcome};
use super::params::LemmaParams;
use super::schedule::PartitionSchedule;
use crate::error::{Error, Result};
use crate::gp_sim::{CovarianceModel, SamplePath};
use crate::grid::TimeGrid;
use crate::pathwise::{Segment, SegmentRule, StepIntegrand};

/// Blocks of a diverging integrand run until a level is reached.
pub(crate) struct Chase {
    pub segments: Vec<Segment>,
    pub records: Vec<BlockRecord>,
    /// Block end indices and the running value there.
    pub block_ends: Vec<(usize, f64)>,
    /// Unsigned running value at the stop (or after the last block).
    pub value: f64,
    pub reached: bool,
    pub stop: Option<usize>,
}

/// On block `n = 1, 2, …` (grid cells `idx[n−1]..idx[n]`) integrate
/// `sign · f_η(X_s − X_{t_{n−1}})` until `|X_s − X_{t_{n−1}}|^{1+η} ≥ 1/n`,
/// or until the running value reaches `level`, which ends the run.
/// `first_block` offsets the block numbering.
pub(crate) fn chase(
    x: &[f64],
    times: &[f64],
    idx: &[usize],
    eta: f64,
    level: f64,
    sign: f64,
    first_block: usize,
) -> Chase {
    let mut out = Chase {
        segments: Vec::new(),
        records: Vec::new(),
        block_ends: Vec::new(),
        value: 0.0,
        reached: false,
        stop: None,
    };
    if level <= 0.0 {
        out.reached = true;
        out.stop = idx.first().copied();
        return out;
    }
    let p = 1.0 + eta;
    for (k, w) in idx.windows(2).enumerate() {
        let n = k + first_block;
        let (a, e) = (w[0], w[1]);
        if e <= a {
            out.records.push(BlockRecord {
                block: n,
                case: BlockCase::Empty,
                start: times[a],
                end: times[e],
                hit: false,
                stop_time: times[e],
                contribution: 0.0,
                target: 1.0 / n as f64,
            });
            out.block_ends.push((e, out.value));
            continue;
        }
        let threshold = 1.0 / n as f64;
        let xa = x[a];
        let mut stop = e;
        let mut hit = false;
        let mut y = (x[e] - xa).abs().powf(p);
        for (i, &xi) in x.iter().enumerate().take(e + 1).skip(a + 1) {
            let yi = (xi - xa).abs().powf(p);
            if out.value + yi >= level {
                stop = i;
                y = yi;
                out.reached = true;
                break;
            }
            if yi >= threshold {
                stop = i;
                y = yi;
                hit = true;
                break;
            }
        }
        out.value += y;
        out.segments.push(Segment::new(a, e, SegmentRule::PowerSign { eta, anchor: a, scale: sign }).stopped_at(stop));
        out.records.push(BlockRecord {
            block: n,
            case: BlockCase::Diverging,
            start: times[a],
            end: times[e],
            hit,
            stop_time: times[stop],
            contribution: sign * y,
            target: threshold,
        });
        out.block_ends.push((e, out.value));
        if out.reached {
            out.stop = Some(stop);
            break;
        }
    }
    out
}

/// Grid indices of a schedule over cells `[from, to]`, clamped into that range.
pub(crate) fn sub_indices(grid: &TimeGrid, from: usize, to: usize, gamma: f64, n_sub: usize) -> Result<Vec<usize>> {
    let t = grid.points();
    if to <= from {
        return Ok(vec![from, to.max(from)]);
    }
    let s = PartitionSchedule::on(gamma, t[from], t[to], n_sub, 1e-10)?;
    let mut prev = from;
    Ok(s.times
        .iter()
        .map(|&u| {
            let i = grid.nearest_index(u).clamp(prev, to);
            prev = i;
            i
        })
        .collect())
}

fn check_schedule(x: &SamplePath, schedule: &PartitionSchedule) -> Result<()> {
    let g = &x.grid;
    if schedule.start < g.start() || schedule.horizon > g.horizon() * (1.0 + 1e-12) {
        return Err(Error::Grid(format!(
            "schedule [{}, {}) outside the path grid [{}, {}]",
            schedule.start,
            schedule.horizon,
            g.start(),
            g.horizon()
        )));
    }
    Ok(())
}

/// Diverging integrand started at `schedule.start`, stopped once its
/// integral reaches `level`.
pub fn build_diverging_integrand(
    x: &SamplePath,
    params: &LemmaParams,
    schedule: &PartitionSchedule,
    level: f64,
) -> Result<ReplicationOutcome> {
    check_schedule(x, schedule)?;
    if !(level > 0.0) {
        return Err(Error::Invalid(format!("level must be positive (got {level})")));
    }
    let idx = schedule.grid_indices(&x.grid);
    let times = x.grid.points();
    let c = chase(&x.values, times, &idx, params.eta, level, 1.0, 1);
    let mut integrand = StepIntegrand::zero(x.grid.clone());
    for s in &c.segments {
        integrand.push(*s)?;
    }
    Ok(ReplicationOutcome {
        integrand,
        block_times: c.block_ends.iter().map(|&(i, _)| times[i]).collect(),
        trajectory: c.block_ends.iter().map(|&(_, v)| v).collect(),
        tracking_error: c.block_ends.iter().map(|&(_, v)| (level - v).max(0.0)).collect(),
        target: level,
        achieved: c.value,
        tolerance: 0.0,
        final_error: (level - c.value).max(0.0),
        success: c.reached,
        records: c.records,
        stop_time: c.stop.map(|i| times[i]),
    })
}

/// Law to be replicated, given by its quantile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetDistribution {
    Normal {
        mean: f64,
        sd: f64,
    },
    PointMass {
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Piecewise-linear CDF through `(points[i], cdf[i])`.
    Tabulated {
        points: Vec<f64>,
        cdf: Vec<f64>,
    },
}

impl TargetDistribution {
    pub fn standard_normal() -> Self {
        TargetDistribution::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        match self {
            TargetDistribution::Normal { sd, .. } if !(*sd > 0.0) => bad("normal sd must be positive"),
            TargetDistribution::Uniform { low, high } if !(high > low) => bad("uniform needs low < high"),
            TargetDistribution::Exponential { rate } if !(*rate > 0.0) => bad("exponential rate must be positive"),
            TargetDistribution::Tabulated { points, cdf } => {
                if points.len() != cdf.len() || points.len() < 2 {
                    return bad("tabulated CDF needs matching points and values, at least two");
                }
                if points.windows(2).any(|w| w[1] <= w[0]) || cdf.windows(2).any(|w| w[1] < w[0]) {
                    return bad("tabulated CDF must be increasing in x and nondecreasing in F");
                }
                if cdf[0] < 0.0 || cdf[cdf.len() - 1] > 1.0 {
                    return bad("tabulated CDF values must lie in [0, 1]");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            TargetDistribution::Normal { mean, sd } => Normal::new(*mean, *sd).map_or(f64::NAN, |n| n.cdf(x)),
            TargetDistribution::PointMass { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            TargetDistribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            TargetDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            TargetDistribution::Tabulated { points, cdf } => {
                let k = points.partition_point(|&p| p <= x);
                if k == 0 {
                    0.0
                } else if k == points.len() {
                    cdf[k - 1]
                } else {
                    let w = (x - points[k - 1]) / (points[k] - points[k - 1]);
                    cdf[k - 1] + w * (cdf[k] - cdf[k - 1])
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            TargetDistribution::Normal { mean, sd } => Normal::new(*mean, *sd).map_or(f64::NAN, |n| n.inverse_cdf(p)),
            TargetDistribution::PointMass { value } => *value,
            TargetDistribution::Uniform { low, high } => low + p * (high - low),
            TargetDistribution::Exponential { rate } => -(-p).ln_1p() / rate,
            TargetDistribution::Tabulated { points, cdf } => {
                if p <= cdf[0] {
                    return points[0];
                }
                let k = cdf.partition_point(|&c| c < p);
                if k == cdf.len() {
                    return if p <= cdf[k - 1] { points[k - 1] } else { f64::INFINITY };
                }
                let span = cdf[k] - cdf[k - 1];
                if span <= 0.0 {
                    return points[k];
                }
                points[k - 1] + (p - cdf[k - 1]) / span * (points[k] - points[k - 1])
            }
        }
    }
}

/// `Φ(x)`.
pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// `g(X_v) = F⁻¹(Φ(X_v/√V(v)))`, produced as a pathwise integral over `[v, T)`.
pub fn replicate_distribution(
    dist: &TargetDistribution,
    model: &CovarianceModel,
    x: &SamplePath,
    v: f64,
    params: &LemmaParams,
    schedule: &PartitionSchedule,
    tolerance: f64,
) -> Result<ReplicationOutcome> {
    dist.validate()?;
    check_schedule(x, schedule)?;
    if (schedule.start - v).abs() > 1e-12 * (1.0 + v.abs()) {
        return Err(Error::Invalid(format!("schedule starts at {}, not at v = {v}", schedule.start)));
    }
    if !(v < x.grid.horizon()) {
        return Err(Error::Window(format!("v < T (got v = {v})")));
    }
    let var = model.variance(v)?;
    if !(var > 0.0) {
        return Err(Error::Invalid(format!("V(v) = {var} must be positive")));
    }
    let iv = x.grid.index_of(v).ok_or_else(|| Error::Invalid(format!("v = {v} is not a grid point")))?;
    let u = std_normal_cdf(x.values[iv] / var.sqrt());
    let target = dist.quantile(u);
    if !target.is_finite() {
        return Err(Error::Numerical(format!("quantile at u = {u} is not finite")));
    }
    let times = x.grid.points();
    let sign = if target < 0.0 { -1.0 } else { 1.0 };
    let idx = schedule.grid_indices(&x.grid);
    let c = chase(&x.values, times, &idx, params.eta, target.abs(), sign, 1);
    let mut integrand = StepIntegrand::zero(x.grid.clone());
    for s in &c.segments {
        integrand.push(*s)?;
    }
    let achieved = sign * c.value;
    let final_error = (achieved - target).abs();
    Ok(ReplicationOutcome {
        integrand,
        block_times: c.block_ends.iter().map(|&(i, _)| times[i]).collect(),
        trajectory: c.block_ends.iter().map(|&(_, v)| sign * v).collect(),
        tracking_error: c.block_ends.iter().map(|&(_, v)| (target.abs() - v).abs()).collect(),
        target,
        achieved,
        tolerance,
        final_error,
        success: c.reached && final_error <= tolerance,
        records: c.records,
        stop_time: c.stop.map(|i| times[i]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicate::params::default_lemma_params;

    fn ramp(n: usize) -> SamplePath {
        let g = TimeGrid::uniform(1.0, n).unwrap().shared();
        // oscillation large enough to hit every threshold
        let v = g.points().iter().map(|&t| 2.0 * (300.0 * t).sin()).collect();
        SamplePath::from_values(g, v, "osc").unwrap()
    }

    #[test]
    fn hit_blocks_contribute_at_least_one_over_n() {
        let p = ramp(4096);
        let lp = default_lemma_params(0.75).unwrap();
        let s = PartitionSchedule::new(lp.gamma, 1.0, 30, 1e-10).unwrap();
        let out = build_diverging_integrand(&p, &lp, &s, 1e9).unwrap();
        for r in &out.records {
            if r.hit {
                assert!(r.contribution >= 1.0 / r.block as f64);
            }
            assert!(r.contribution >= 0.0);
        }
        assert!(out.trajectory.windows(2).all(|w| w[1] >= w[0]));
        let exact = out.integrand.closed_form_at(&p, p.grid.intervals()).unwrap();
        assert!((exact - out.achieved).abs() < 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn threshold_algebra() {
        // η = 1, n = 4: 4^{−1/2}
        let eta: f64 = 1.0;
        assert_eq!(4f64.powf(-1.0 / (1.0 + eta)), 0.5);
    }

    #[test]
    fn point_mass_at_zero_is_idle() {
        let p = ramp(1024);
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let lp = default_lemma_params(0.75).unwrap();
        let s = PartitionSchedule::on(lp.gamma, 0.5, 1.0, 50, 1e-10).unwrap();
        let out =
            replicate_distribution(&TargetDistribution::PointMass { value: 0.0 }, &m, &p, 0.5, &lp, &s, 1e-9).unwrap();
        assert_eq!(out.achieved, 0.0);
        assert!(out.success);
        assert!(out.integrand.segments().is_empty());
        assert_eq!(out.stop_time, Some(0.5));
    }

    #[test]
    fn quantiles_invert_cdfs() {
        let ds = [
            TargetDistribution::standard_normal(),
            TargetDistribution::Uniform { low: -1.0, high: 3.0 },
            TargetDistribution::Exponential { rate: 2.0 },
            TargetDistribution::Tabulated { points: vec![0.0, 1.0, 3.0], cdf: vec![0.0, 0.25, 1.0] },
        ];
        for d in &ds {
            d.validate().unwrap();
            for p in [0.05, 0.3, 0.5, 0.9] {
                assert!((d.cdf(d.quantile(p)) - p).abs() < 1e-9, "{d:?} {p}");
            }
        }
    }

    #[test]
    fn exact_hit_accounting() {
        let p = ramp(4096);
        let m = CovarianceModel::fbm(0.75, 1.0).unwrap();
        let lp = default_lemma_params(0.75).unwrap();
        let s = PartitionSchedule::on(lp.gamma, 0.5, 1.0, 50, 1e-10).unwrap();
        let d = TargetDistribution::Normal { mean: -1.5, sd: 0.1 };
        let out = replicate_distribution(&d, &m, &p, 0.5, &lp, &s, 1.0).unwrap();
        assert!(out.target < 0.0);
        assert!(out.success);
        assert!(out.achieved.abs() - out.target.abs() >= 0.0);
        assert_eq!(out.achieved, *out.trajectory.last().unwrap());
    }
}
