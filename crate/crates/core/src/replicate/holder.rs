use serde::{Deserialize, Serialize};

use super::diverging::{chase, sub_indices};
use super::outcome::{BlockCase, BlockRecord, ReplicationOutcome};
use super::params::{HolderParams, LemmaParams};
use super::rv::SUB_BLOCKS;
use super::schedule::PartitionSchedule;
use crate::error::{Error, Result};
use crate::gp_sim::SamplePath;
use crate::pathwise::{Segment, SegmentRule, StepIntegrand};

/// Hölder process `Z` on the path's grid whose endpoint is replicated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolderTarget {
    /// `Z = X`.
    Path,
    /// `Z_t = (X_t − K)^+`.
    Call {
        strike: f64,
    },
    /// `Z_t = tanh(scale · X_t)`.
    Tanh {
        scale: f64,
    },
    Constant {
        value: f64,
    },
    /// Independent path given on the same grid.
    Auxiliary {
        values: Vec<f64>,
    },
}

impl HolderTarget {
    pub fn values(&self, x: &SamplePath) -> Result<Vec<f64>> {
        Ok(match self {
            HolderTarget::Path => x.values.clone(),
            HolderTarget::Call { strike } => x.values.iter().map(|v| (v - strike).max(0.0)).collect(),
            HolderTarget::Tanh { scale } => x.values.iter().map(|v| (scale * v).tanh()).collect(),
            HolderTarget::Constant { value } => vec![*value; x.len()],
            HolderTarget::Auxiliary { values } => {
                if values.len() != x.len() {
                    return Err(Error::Grid(format!(
                        "auxiliary path has {} values, grid has {}",
                        values.len(),
                        x.len()
                    )));
                }
                values.clone()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderOptions {
    /// Diverging integrand used by Case B blocks.
    pub lemma: LemmaParams,
    /// Sub-blocks of a Case B run.
    pub n_sub: usize,
    pub tolerance: f64,
}

impl HolderOptions {
    pub fn new(lemma: LemmaParams, tolerance: f64) -> Self {
        Self { lemma, n_sub: SUB_BLOCKS, tolerance }
    }
}

/// Proper replication of `Z` at the last block time. `Ψ = 0` on `[t_0, t_1]`;
/// block `n ≥ 2` runs on `(t_{n−1}, t_n]` toward the gap `Z_{t_{n−1}} − Y_{t_{n−1}}`.
/// If the previous block hit (for `n = 2`: `Y_{t_1} = Z_{t_0}`), the block uses
/// `n^κ sign(X_s − X_{t_{n−1}}) sign(gap)` stopped when `n^κ|X_s − X_{t_{n−1}}| ≥ |gap|`
/// (Case A); otherwise a diverging sub-run chases `|gap|` (Case B).
pub fn replicate_holder(
    z: &HolderTarget,
    x: &SamplePath,
    params: &HolderParams,
    schedule: &PartitionSchedule,
    opts: &HolderOptions,
) -> Result<ReplicationOutcome> {
    let grid = &x.grid;
    if schedule.start < grid.start() || schedule.horizon > grid.horizon() * (1.0 + 1e-12) {
        return Err(Error::Grid("schedule outside the path grid".into()));
    }
    if (schedule.gamma - params.gamma).abs() > 1e-12 * params.gamma {
        return Err(Error::Invalid(format!(
            "schedule γ = {} differs from the replication γ = {}",
            schedule.gamma, params.gamma
        )));
    }
    let zv = z.values(x)?;
    let times = grid.points();
    let idx = schedule.grid_indices(grid);
    let n_max = idx.len() - 1;

    let mut integrand = StepIntegrand::zero(grid.clone());
    let mut records = Vec::new();
    let mut block_times = vec![times[idx[1]]];
    let mut trajectory = vec![0.0];
    let mut tracking = vec![(zv[idx[0]]).abs()];
    let mut y = 0.0;
    let mut prev_hit = y == zv[idx[0]];
    for n in 2..=n_max {
        let (a, e) = (idx[n - 1], idx[n]);
        let gap = zv[a] - y;
        let sign = if gap < 0.0 { -1.0 } else { 1.0 };
        let mut rec = BlockRecord {
            block: n,
            case: if prev_hit { BlockCase::A } else { BlockCase::B },
            start: times[a],
            end: times[e],
            hit: false,
            stop_time: times[e],
            contribution: 0.0,
            target: gap,
        };
        if gap == 0.0 {
            rec.hit = true;
            rec.stop_time = times[a];
        } else if e > a {
            if prev_hit {
                let m = (n as f64).powf(params.kappa);
                let xa = x.values[a];
                let mut stop = e;
                for i in a + 1..=e {
                    if m * (x.values[i] - xa).abs() >= gap.abs() {
                        stop = i;
                        rec.hit = true;
                        break;
                    }
                }
                let seg =
                    Segment::new(a, e, SegmentRule::ScaledSign { multiplier: m, anchor: a, sign }).stopped_at(stop);
                rec.contribution = seg.closed_form(&x.values, e);
                rec.stop_time = times[stop];
                integrand.push(seg)?;
            } else {
                let sub = sub_indices(grid, a, e, opts.lemma.gamma, opts.n_sub)?;
                let c = chase(&x.values, times, &sub, opts.lemma.eta, gap.abs(), sign, 1);
                for s in &c.segments {
                    integrand.push(*s)?;
                }
                rec.hit = c.reached;
                rec.contribution = sign * c.value;
                rec.stop_time = times[c.stop.unwrap_or(e)];
            }
        }
        y += rec.contribution;
        prev_hit = rec.hit;
        records.push(rec);
        block_times.push(times[e]);
        trajectory.push(y);
        tracking.push((y - zv[a]).abs());
    }
    let target = zv[idx[n_max - 1]];
    let final_error = (y - target).abs();
    Ok(ReplicationOutcome {
        integrand,
        block_times,
        trajectory,
        tracking_error: tracking,
        target,
        achieved: y,
        tolerance: opts.tolerance,
        final_error,
        success: final_error <= opts.tolerance,
        records,
        stop_time: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::replicate::params::{default_holder_params, default_lemma_params};

    fn osc(n: usize, amp: f64, freq: f64) -> SamplePath {
        let g = TimeGrid::uniform(1.0, n).unwrap().shared();
        let v = g.points().iter().map(|&t| amp * (freq * t).sin()).collect();
        SamplePath::from_values(g, v, "osc").unwrap()
    }

    fn setup() -> (HolderParams, PartitionSchedule, HolderOptions) {
        let p = default_holder_params(0.75, 0.6).unwrap();
        let s = PartitionSchedule::new(p.gamma, 1.0, 6, 1e-10).unwrap();
        let o = HolderOptions::new(default_lemma_params(0.75).unwrap(), 0.05);
        (p, s, o)
    }

    #[test]
    fn zero_target_is_idle() {
        let (p, s, o) = setup();
        let x = osc(8192, 1.0, 40.0);
        let out = replicate_holder(&HolderTarget::Constant { value: 0.0 }, &x, &p, &s, &o).unwrap();
        assert!(out.integrand.segments().is_empty());
        assert_eq!(out.achieved, 0.0);
        assert!(out.records.iter().all(|r| r.case == BlockCase::A && r.hit));
    }

    #[test]
    fn nonzero_constant_is_chased_once() {
        let (p, s, o) = setup();
        let x = osc(8192, 2.0, 3000.0);
        let out = replicate_holder(&HolderTarget::Constant { value: 0.3 }, &x, &p, &s, &o).unwrap();
        assert_eq!(out.records[0].case, BlockCase::B);
        assert!(out.records[0].hit);
        assert!(out.records[1].case == BlockCase::A);
    }

    #[test]
    fn metadata_matches_closed_form() {
        let (p, s, o) = setup();
        let x = osc(8192, 1.5, 2000.0);
        let out = replicate_holder(&HolderTarget::Path, &x, &p, &s, &o).unwrap();
        let direct = out.integrand.closed_form_at(&x, x.len() - 1).unwrap();
        assert!((direct - out.achieved).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn zero_before_first_block() {
        let (p, s, o) = setup();
        let x = osc(8192, 1.5, 2000.0);
        let out = replicate_holder(&HolderTarget::Path, &x, &p, &s, &o).unwrap();
        let i1 = s.grid_indices(&x.grid)[1];
        assert!(out.integrand.segments().iter().all(|sg| sg.start >= i1));
    }
}
