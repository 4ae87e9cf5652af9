//! Forward (Föllmer) sums and piecewise adapted integrands.
//!
//! A [`StepIntegrand`] is evaluated two ways: by left-point sums on the
//! grid ([`integrate_step`]) and exactly, segment by segment, through the
//! change-of-variables formula `∫_a^τ f(X_s − X_a) dX_s = F(X_τ − X_a)`
//! ([`StepIntegrand::closed_form`]). The constructions in `replicate`
//! account with the exact form; the forward sum is its discretization.

mod follmer;
mod ito;
mod step;

pub use follmer::{follmer_integral, FollmerResult};
pub use ito::{ito_residual, ItoRule};
pub use step::{integrate_step, integrate_step_between, power_sign, Segment, SegmentRule, StepIntegrand};
