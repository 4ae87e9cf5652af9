//! Replication constructions: the diverging integrand, distribution
//! replication, improper replication of random variables and proper
//! replication of Hölder endpoints.

mod conditional;
mod diverging;
mod holder;
mod outcome;
mod params;
mod rv;
mod schedule;

pub use conditional::{
    conditional_expectation_arctan, ConditionalArctan, XiSpec, ARCTAN_CLIP, HERMITE_NODES, MAX_OBSERVATIONS,
};
pub use diverging::{build_diverging_integrand, replicate_distribution, TargetDistribution};
pub use holder::{replicate_holder, HolderOptions, HolderTarget};
pub use outcome::{BlockCase, BlockRecord, OutcomeSummary, ReplicationOutcome};
pub use params::{
    default_holder_params, default_holder_params_with_theta, default_lemma_params, path_order, HolderParams,
    LemmaParams, WINDOW_GUARD,
};
pub use rv::{replicate_rv, replicate_rv_with, SUB_BLOCKS};
pub use schedule::PartitionSchedule;

use crate::error::Result;

/// Block times with `Δ_n = T n^{−γ}/S_γ`.
pub fn partition_schedule(gamma: f64, horizon: f64, n_max: usize, tail_tol: f64) -> Result<PartitionSchedule> {
    PartitionSchedule::new(gamma, horizon, n_max, tail_tol)
}

impl ReplicationOutcome {
    /// Largest gap between the running value rebuilt from block contributions
    /// and the closed-form integral of the assembled integrand at block ends.
    pub fn consistency_gap(&self, x: &crate::gp_sim::SamplePath) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (&t, &v) in self.block_times.iter().zip(&self.trajectory) {
            let direct = self.integrand.closed_form(x, t)?;
            worst = worst.max((direct - v).abs());
        }
        Ok(worst)
    }
}
