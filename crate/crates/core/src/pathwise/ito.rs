use serde::{Deserialize, Serialize};

use super::step::{grid_index, integrate_step_between, Segment, SegmentRule, StepIntegrand};
use crate::error::{Error, Result};
use crate::gp_sim::{CovarianceModel, SamplePath};

/// Bounded-variation integrand `f` of the change-of-variables formula
/// `F(X_T − X_u) = ∫_u^T f(X_s − X_u) dX_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItoRule {
    Constant { value: f64 },
    Sign,
    Indicator { level: f64 },
    PowerSign { eta: f64 },
}

impl ItoRule {
    pub(crate) fn segment_rule(self, anchor: usize) -> Result<SegmentRule> {
        Ok(match self {
            ItoRule::Constant { value } if value.is_finite() => SegmentRule::Constant(value),
            ItoRule::Sign => SegmentRule::ScaledSign { multiplier: 1.0, anchor, sign: 1.0 },
            ItoRule::Indicator { level } if level.is_finite() => SegmentRule::Indicator { level, anchor },
            ItoRule::PowerSign { eta } if eta > 0.0 && eta.is_finite() => {
                SegmentRule::PowerSign { eta, anchor, scale: 1.0 }
            }
            other => {
                return Err(Error::Unsupported(format!("{other:?} is not of bounded variation on bounded ranges")))
            }
        })
    }
}

/// `F(X_T − X_u) − Σ f(X_{s_i} − X_u)(X_{s_{i+1}} − X_{s_i})` over the grid
/// cells in `[u, T]`.
pub fn ito_residual(model: &CovarianceModel, rule: ItoRule, u: f64, path: &SamplePath) -> Result<f64> {
    let horizon = path.grid.horizon();
    if horizon > model.horizon() * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain { t: horizon, horizon: model.horizon() });
    }
    if !(u >= path.grid.start() && u < horizon) {
        return Err(Error::Window(format!("0 ≤ u < T (got u = {u})")));
    }
    let iu = grid_index(&path.grid, u)?;
    let n = path.grid.intervals();
    let seg_rule = rule.segment_rule(iu)?;
    let mut phi = StepIntegrand::zero(path.grid.clone());
    phi.push(Segment::new(iu, n, seg_rule))?;
    let forward = integrate_step_between(&phi, path, iu, n)?;
    let exact = phi.closed_form_at(path, n)?;
    Ok(exact - forward)
}
