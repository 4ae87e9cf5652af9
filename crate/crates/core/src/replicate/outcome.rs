use serde::Serialize;

use crate::pathwise::StepIntegrand;

/// How a block was run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockCase {
    /// Block of a diverging integrand.
    Diverging,
    /// Scaled-sign chase of the next increment (previous block succeeded).
    A,
    /// Diverging sub-run toward the accumulated gap (previous block missed).
    B,
    /// Zero target: nothing to do.
    Idle,
    /// The block has no grid cell.
    Empty,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRecord {
    pub block: usize,
    pub case: BlockCase,
    pub start: f64,
    pub end: f64,
    /// The block's stopping condition was met before its end.
    pub hit: bool,
    pub stop_time: f64,
    /// Exact integral over the block.
    pub contribution: f64,
    /// Amount the block aimed for (threshold or gap), when it has one.
    pub target: f64,
}

/// Result of a replication construction on one path.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub integrand: StepIntegrand,
    /// Block end times.
    pub block_times: Vec<f64>,
    /// Running integral at the block ends.
    pub trajectory: Vec<f64>,
    /// Construction-specific distance to the target at the block ends.
    pub tracking_error: Vec<f64>,
    pub target: f64,
    pub achieved: f64,
    pub tolerance: f64,
    pub final_error: f64,
    pub success: bool,
    pub records: Vec<BlockRecord>,
    /// Time the construction stopped integrating, if it did.
    pub stop_time: Option<f64>,
}

impl ReplicationOutcome {
    pub fn case_b_frequency(&self) -> f64 {
        let ab: Vec<_> = self.records.iter().filter(|r| matches!(r.case, BlockCase::A | BlockCase::B)).collect();
        if ab.is_empty() {
            return 0.0;
        }
        ab.iter().filter(|r| r.case == BlockCase::B).count() as f64 / ab.len() as f64
    }

    pub fn summary(&self) -> OutcomeSummary {
        let blocks = self.records.len();
        let hits = self.records.iter().filter(|r| r.hit).count();
        OutcomeSummary {
            success: self.success,
            target: self.target,
            achieved: self.achieved,
            final_error: self.final_error,
            tolerance: self.tolerance,
            blocks,
            hits,
            case_b_frequency: self.case_b_frequency(),
            stop_time: self.stop_time,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeSummary {
    pub success: bool,
    pub target: f64,
    pub achieved: f64,
    pub final_error: f64,
    pub tolerance: f64,
    pub blocks: usize,
    pub hits: usize,
    pub case_b_frequency: f64,
    pub stop_time: Option<f64>,
}
