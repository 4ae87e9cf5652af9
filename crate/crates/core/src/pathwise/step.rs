use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gp_sim::SamplePath;
use crate::grid::TimeGrid;

/// `f_η(x) = (1 + η)|x|^η sign(x)`.
#[inline]
pub fn power_sign(x: f64, eta: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (1.0 + eta) * x.abs().powf(eta) * x.signum()
    }
}

#[inline]
fn sign0(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum()
    }
}

/// How a segment's value is computed from the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SegmentRule {
    Constant(f64),
    /// `scale · f_η(X_s − X_anchor)`.
    PowerSign {
        eta: f64,
        anchor: usize,
        scale: f64,
    },
    /// `multiplier · sign · sign(X_s − X_anchor)`.
    ScaledSign {
        multiplier: f64,
        anchor: usize,
        sign: f64,
    },
    /// `1{X_s − X_anchor > level}`.
    Indicator {
        level: f64,
        anchor: usize,
    },
}

impl SegmentRule {
    fn anchor(&self) -> Option<usize> {
        match *self {
            SegmentRule::Constant(_) => None,
            SegmentRule::PowerSign { anchor, .. }
            | SegmentRule::ScaledSign { anchor, .. }
            | SegmentRule::Indicator { anchor, .. } => Some(anchor),
        }
    }

    /// Integrand value given the current and anchor path values.
    #[inline]
    pub fn eval(&self, x: f64, x_anchor: f64) -> f64 {
        match *self {
            SegmentRule::Constant(c) => c,
            SegmentRule::PowerSign { eta, scale, .. } => scale * power_sign(x - x_anchor, eta),
            SegmentRule::ScaledSign { multiplier, sign, .. } => multiplier * sign * sign0(x - x_anchor),
            SegmentRule::Indicator { level, .. } => {
                if x - x_anchor > level {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Antiderivative in the increment `y = X − X_anchor` (for constants, in `X`).
    #[inline]
    pub fn primitive(&self, y: f64) -> f64 {
        match *self {
            SegmentRule::Constant(c) => c * y,
            SegmentRule::PowerSign { eta, scale, .. } => scale * y.abs().powf(1.0 + eta),
            SegmentRule::ScaledSign { multiplier, sign, .. } => multiplier * sign * y.abs(),
            SegmentRule::Indicator { level, .. } => (y - level).max(0.0) - (-level).max(0.0),
        }
    }
}

/// Integrand active on grid cells `[start, stop)`; `stop ≤ end` is the
/// (grid) stopping index, after which the segment contributes zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub stop: usize,
    pub rule: SegmentRule,
}

impl Segment {
    pub fn new(start: usize, end: usize, rule: SegmentRule) -> Self {
        Self { start, end, stop: end, rule }
    }

    pub fn stopped_at(mut self, stop: usize) -> Self {
        self.stop = stop.clamp(self.start, self.end);
        self
    }

    #[inline]
    pub fn is_active(&self, i: usize) -> bool {
        i >= self.start && i < self.stop
    }

    /// Exact pathwise integral of the segment over `[start, min(stop, j)]`:
    /// the change of the primitive between the two stopping points.
    pub fn closed_form(&self, x: &[f64], j: usize) -> f64 {
        let hi = self.stop.min(j);
        if hi <= self.start {
            return 0.0;
        }
        match self.rule {
            SegmentRule::Constant(c) => c * (x[hi] - x[self.start]),
            r => {
                let a = x[r.anchor().unwrap()];
                r.primitive(x[hi] - a) - r.primitive(x[self.start] - a)
            }
        }
    }
}

/// An adapted piecewise integrand on a grid. Cells not covered by any
/// segment carry zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StepIntegrand {
    grid: Arc<TimeGrid>,
    segments: Vec<Segment>,
}

impl StepIntegrand {
    pub fn zero(grid: Arc<TimeGrid>) -> Self {
        Self { grid, segments: Vec::new() }
    }

    pub fn constant(grid: Arc<TimeGrid>, c: f64) -> Self {
        let end = grid.intervals();
        Self { grid, segments: vec![Segment::new(0, end, SegmentRule::Constant(c))] }
    }

    /// Appends a segment; segments must be ordered, disjoint and anchored
    /// no later than their start.
    pub fn push(&mut self, seg: Segment) -> Result<()> {
        let n = self.grid.intervals();
        if seg.start > seg.end || seg.end > n || seg.stop < seg.start || seg.stop > seg.end {
            return Err(Error::Invalid(format!("segment {seg:?} outside 0..={n}")));
        }
        if let Some(last) = self.segments.last() {
            if seg.start < last.end {
                return Err(Error::Invalid(format!("segment starting at {} overlaps previous", seg.start)));
            }
        }
        if let Some(a) = seg.rule.anchor() {
            if a > seg.start {
                return Err(Error::Invalid(format!("anchor {a} after segment start {}", seg.start)));
            }
        }
        self.segments.push(seg);
        Ok(())
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment covering cell `i`, if any.
    pub fn segment_at(&self, i: usize) -> Option<usize> {
        let k = self.segments.partition_point(|s| s.end <= i);
        (k < self.segments.len() && self.segments[k].start <= i).then_some(k)
    }

    fn check(&self, path: &SamplePath) -> Result<()> {
        if path.len() != self.grid.len() {
            return Err(Error::Grid(format!("path has {} points, integrand grid {}", path.len(), self.grid.len())));
        }
        Ok(())
    }

    /// Integrand values at every grid point (the last point gets the value
    /// a cell starting there would use, i.e. usually 0).
    pub fn values(&self, path: &SamplePath) -> Result<Vec<f64>> {
        self.check(path)?;
        let x = &path.values;
        let mut out = vec![0.0; x.len()];
        for seg in &self.segments {
            let a = seg.rule.anchor().map_or(0.0, |a| x[a]);
            for (i, v) in out.iter_mut().enumerate().take(seg.stop).skip(seg.start) {
                *v = seg.rule.eval(x[i], a);
            }
        }
        Ok(out)
    }

    /// Left-point sums `Σ φ(u_i)(X_{u_{i+1}} − X_{u_i})` at every grid point.
    pub fn forward_trajectory(&self, path: &SamplePath) -> Result<Vec<f64>> {
        let phi = self.values(path)?;
        let x = &path.values;
        let mut out = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 0..x.len() - 1 {
            acc += phi[i] * (x[i + 1] - x[i]);
            out.push(acc);
        }
        Ok(out)
    }

    /// Sum of the segments' exact integrals up to grid index `j`.
    pub fn closed_form_at(&self, path: &SamplePath, j: usize) -> Result<f64> {
        self.check(path)?;
        Ok(self.segments.iter().take_while(|s| s.start < j).map(|s| s.closed_form(&path.values, j)).sum())
    }

    /// Exact integral over `[0, t]`.
    pub fn closed_form(&self, path: &SamplePath, t: f64) -> Result<f64> {
        let j = grid_index(&self.grid, t)?;
        self.closed_form_at(path, j)
    }

    /// Writes `time,running_value,forward_sum,segment,active`.
    pub fn write_trajectory_csv<W: Write>(&self, path: &SamplePath, out: W) -> Result<()> {
        let fwd = self.forward_trajectory(path)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "running_value", "forward_sum", "segment", "active"])?;
        for (i, &t) in self.grid.points().iter().enumerate() {
            let seg = self.segment_at(i);
            let active = seg.is_some_and(|k| self.segments[k].is_active(i));
            let closed = self.closed_form_at(path, i)?;
            w.write_record([
                t.to_string(),
                closed.to_string(),
                fwd[i].to_string(),
                seg.map_or(String::new(), |k| k.to_string()),
                (active as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn grid_index(grid: &TimeGrid, t: f64) -> Result<usize> {
    grid.index_of(t).ok_or_else(|| Error::Invalid(format!("t = {t} is not a grid point")))
}

/// Forward sum of `φ` against `X` over `[0, t]`.
pub fn integrate_step(phi: &StepIntegrand, x: &SamplePath, t: f64) -> Result<f64> {
    let j = grid_index(phi.grid(), t)?;
    integrate_step_between(phi, x, 0, j)
}

/// Forward sum over grid cells `[i, j)`.
pub fn integrate_step_between(phi: &StepIntegrand, x: &SamplePath, i: usize, j: usize) -> Result<f64> {
    phi.check(x)?;
    let v = &x.values;
    let mut acc = 0.0;
    for seg in phi.segments() {
        let lo = seg.start.max(i);
        let hi = seg.stop.min(j);
        if lo >= hi {
            continue;
        }
        let a = seg.rule.anchor().map_or(0.0, |a| v[a]);
        for k in lo..hi {
            acc += seg.rule.eval(v[k], a) * (v[k + 1] - v[k]);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> SamplePath {
        let g = TimeGrid::uniform(1.0, 64).unwrap().shared();
        let v: Vec<f64> = g.points().iter().map(|&t| (9.0 * t).sin() * t).collect();
        SamplePath::from_values(g, v, "test").unwrap()
    }

    #[test]
    fn zero_and_constant() {
        let p = path();
        let z = StepIntegrand::zero(p.grid.clone());
        assert_eq!(integrate_step(&z, &p, 1.0).unwrap(), 0.0);
        let c = StepIntegrand::constant(p.grid.clone(), 2.5);
        let v = integrate_step(&c, &p, 0.5).unwrap();
        assert!((v - 2.5 * (p.values[32] - p.values[0])).abs() < 1e-14);
        assert!((c.closed_form(&p, 0.5).unwrap() - v).abs() < 1e-14);
    }

    #[test]
    fn additivity() {
        let p = path();
        let mut phi = StepIntegrand::zero(p.grid.clone());
        phi.push(Segment::new(3, 40, SegmentRule::PowerSign { eta: 0.3, anchor: 3, scale: 1.0 }).stopped_at(30))
            .unwrap();
        phi.push(Segment::new(40, 64, SegmentRule::ScaledSign { multiplier: 2.0, anchor: 40, sign: -1.0 })).unwrap();
        let whole = integrate_step_between(&phi, &p, 0, 64).unwrap();
        let parts =
            integrate_step_between(&phi, &p, 0, 25).unwrap() + integrate_step_between(&phi, &p, 25, 64).unwrap();
        // equal up to the reordering of one floating-point sum
        assert!((whole - parts).abs() <= 1e-14 * (1.0 + whole.abs()), "{whole} vs {parts}");
    }

    #[test]
    fn stop_kills_integrand() {
        let p = path();
        let mut phi = StepIntegrand::zero(p.grid.clone());
        phi.push(Segment::new(0, 64, SegmentRule::Constant(1.0)).stopped_at(10)).unwrap();
        let v = phi.values(&p).unwrap();
        assert!(v[..10].iter().all(|&x| x == 1.0) && v[10..].iter().all(|&x| x == 0.0));
        assert!((integrate_step(&phi, &p, 1.0).unwrap() - (p.values[10] - p.values[0])).abs() < 1e-14);
    }

    #[test]
    fn rejects_overlap_and_future_anchor() {
        let p = path();
        let mut phi = StepIntegrand::zero(p.grid.clone());
        phi.push(Segment::new(0, 10, SegmentRule::Constant(1.0))).unwrap();
        assert!(phi.push(Segment::new(5, 12, SegmentRule::Constant(1.0))).is_err());
        assert!(phi.push(Segment::new(12, 20, SegmentRule::PowerSign { eta: 1.0, anchor: 13, scale: 1.0 })).is_err());
    }

    #[test]
    fn power_sign_primitive() {
        let r = SegmentRule::PowerSign { eta: 1.0, anchor: 0, scale: 1.0 };
        assert_eq!(r.primitive(-3.0), 9.0);
        assert_eq!(r.eval(2.0, 0.5), 3.0);
        assert_eq!(power_sign(0.0, 0.5), 0.0);
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let p = path();
        let phi = StepIntegrand::constant(p.grid.clone(), 1.0);
        let mut buf = Vec::new();
        phi.write_trajectory_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,running_value,forward_sum,segment,active"));
        assert_eq!(text.lines().count(), 66);
    }
}
