//! Gaussian path simulation, fractional calculus on grids, pathwise
//! (generalized Lebesgue–Stieltjes and Föllmer) integration, and explicit
//! constructions of adapted integrands that replicate prescribed random
//! variables, together with a Monte Carlo verification harness.
//!
//! The crate is organised bottom-up:
//!
//! * [`gp_sim`]: covariance models, exact path sampling, class checks.
//! * [`frac_calc`]: Besov norms, Weyl-form fractional derivatives, the
//!   generalized Lebesgue–Stieltjes integral and its a-priori bound.
//! * [`pathwise`]: forward sums, step integrands, Itô residuals.
//! * [`replicate`]: partition schedules and the replication constructions.
//! * [`verify`]: small-ball, crossing, Kolmogorov–Smirnov and zero-integral checks.
//! * [`io`]: run configuration and CSV/summary export.

// `!(x > y)` is how NaN inputs are rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod frac_calc;
pub mod gp_sim;
pub mod grid;
pub mod io;
pub mod pathwise;
pub mod replicate;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use frac_calc::{Beta, GridFunction};
pub use gp_sim::{ClassReport, CovarianceModel, Kernel, PathBatch, PathSampler, SamplePath};
pub use grid::TimeGrid;
pub use pathwise::{FollmerResult, Segment, SegmentRule, StepIntegrand};
pub use replicate::{BlockCase, BlockRecord, HolderParams, LemmaParams, PartitionSchedule, ReplicationOutcome};
pub use verify::{CrossingReport, EstimateWithCI};
