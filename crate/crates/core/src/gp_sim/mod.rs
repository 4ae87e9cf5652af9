//! Covariance models, exact Gaussian path sampling and numerical checks of
//! the covariance conditions the replication constructions rely on.

mod class;
mod model;
pub(crate) mod sampler;
mod smallball;

pub use class::{check_class_membership, check_class_membership_with, ClassOptions, ClassReport};
pub use model::{CovarianceModel, Kernel, Structure};
pub use sampler::{sample_paths, PathBatch, PathSampler, SamplePath, SamplingMethod};
pub use smallball::{check_lag_variance, check_smallball_conditions, SmallBallConditionReport};
