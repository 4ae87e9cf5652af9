use super::conditional::{ConditionalArctan, XiSpec};
use super::diverging::{chase, sub_indices};
use super::outcome::{BlockCase, BlockRecord, ReplicationOutcome};
use super::params::LemmaParams;
use super::schedule::PartitionSchedule;
use crate::error::{Error, Result};
use crate::gp_sim::{CovarianceModel, SamplePath};
use crate::pathwise::StepIntegrand;

/// Sub-blocks of the diverging integrand inside one block.
pub const SUB_BLOCKS: usize = 50;

/// Improper replication of `ξ`: block `n` on `[t_n, t_{n+1})` integrates a
/// diverging integrand, signed, until the running integral has moved by
/// `Y_{t_n} − V_{t_n}`, where `Y_t = tan E[arctan ξ | F_t]` and `Y_{t_0} = 0`.
/// A block that runs out of sub-blocks leaves its remainder in the next gap.
pub fn replicate_rv(
    spec: &XiSpec,
    model: &CovarianceModel,
    x: &SamplePath,
    schedule: &PartitionSchedule,
    params: &LemmaParams,
    tolerance: f64,
) -> Result<ReplicationOutcome> {
    let cond = ConditionalArctan::new(model, x.grid.clone(), spec)?;
    replicate_rv_with(&cond, x, schedule, params, tolerance)
}

/// [`replicate_rv`] reusing one conditional-expectation evaluator across paths.
pub fn replicate_rv_with(
    cond: &ConditionalArctan,
    x: &SamplePath,
    schedule: &PartitionSchedule,
    params: &LemmaParams,
    tolerance: f64,
) -> Result<ReplicationOutcome> {
    let grid = &x.grid;
    if schedule.horizon > grid.horizon() * (1.0 + 1e-12) || schedule.start < grid.start() {
        return Err(Error::Grid("schedule outside the path grid".into()));
    }
    let times = grid.points();
    let idx = schedule.grid_indices(grid);
    let xi = cond.realized(&x.values);

    let mut integrand = StepIntegrand::zero(grid.clone());
    let mut records = Vec::new();
    let mut block_times = Vec::new();
    let mut trajectory = Vec::new();
    let mut tracking = Vec::new();
    let mut v = 0.0;
    // V_{t_1} = 0: nothing is integrated before the first block
    block_times.push(times[idx[1]]);
    trajectory.push(0.0);
    tracking.push(xi.abs());
    for n in 1..idx.len() - 1 {
        let (a, e) = (idx[n], idx[n + 1]);
        let y = cond.value(&x.values, a)?;
        let gap = y - v;
        let sign = if gap < 0.0 { -1.0 } else { 1.0 };
        if gap == 0.0 || e <= a {
            records.push(BlockRecord {
                block: n,
                case: if gap == 0.0 { BlockCase::Idle } else { BlockCase::Empty },
                start: times[a],
                end: times[e],
                hit: gap == 0.0,
                stop_time: times[a],
                contribution: 0.0,
                target: gap,
            });
        } else {
            let sub = sub_indices(grid, a, e, params.gamma, SUB_BLOCKS)?;
            let c = chase(&x.values, times, &sub, params.eta, gap.abs(), sign, 1);
            for s in &c.segments {
                integrand.push(*s)?;
            }
            let contribution = sign * c.value;
            v += contribution;
            records.push(BlockRecord {
                block: n,
                case: BlockCase::Diverging,
                start: times[a],
                end: times[e],
                hit: c.reached,
                stop_time: times[c.stop.unwrap_or(e)],
                contribution,
                target: gap,
            });
        }
        block_times.push(times[e]);
        trajectory.push(v);
        tracking.push((v - xi).abs());
    }
    let final_error = (v - xi).abs();
    Ok(ReplicationOutcome {
        integrand,
        block_times,
        trajectory,
        tracking_error: tracking,
        target: xi,
        achieved: v,
        tolerance,
        final_error,
        success: final_error <= tolerance,
        records,
        stop_time: None,
    })
}
