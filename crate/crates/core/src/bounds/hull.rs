use super::BoundsError;
use crate::model::RateMemoryPoint;
use crate::TOL;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// A continuous piecewise-linear function of memory given by its breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearBound {
    breakpoints: Vec<RateMemoryPoint>,
    kind: BoundKind,
}

impl PiecewiseLinearBound {
    pub fn new(breakpoints: Vec<RateMemoryPoint>, kind: BoundKind) -> Result<Self, BoundsError> {
        if breakpoints.is_empty() {
            return Err(BoundsError::Empty);
        }
        if breakpoints.iter().any(|p| !p.memory.is_finite() || !p.rate.is_finite()) {
            return Err(BoundsError::NonFinite);
        }
        if breakpoints.windows(2).any(|w| w[1].memory <= w[0].memory) {
            return Err(BoundsError::NotIncreasing);
        }
        Ok(Self { breakpoints, kind })
    }

    /// Builds from points that may repeat an abscissa; repeated points must agree.
    pub(crate) fn from_chain(points: &[RateMemoryPoint], kind: BoundKind) -> Result<Self, BoundsError> {
        let mut out: Vec<RateMemoryPoint> = Vec::with_capacity(points.len());
        for &p in points {
            match out.last() {
                Some(last) if (p.memory - last.memory).abs() <= TOL => {
                    debug_assert!((p.rate - last.rate).abs() <= 1e-6, "{last:?} vs {p:?}");
                }
                _ => out.push(p),
            }
        }
        Self::new(simplify_collinear(out), kind)
    }

    pub fn breakpoints(&self) -> &[RateMemoryPoint] {
        &self.breakpoints
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn memory_range(&self) -> (f64, f64) {
        (self.breakpoints[0].memory, self.breakpoints[self.breakpoints.len() - 1].memory)
    }

    /// Linear interpolation between the adjacent breakpoints.
    pub fn eval(&self, memory: f64) -> Result<f64, BoundsError> {
        let (lo, hi) = self.memory_range();
        if !(memory >= lo - TOL && memory <= hi + TOL) {
            return Err(BoundsError::OutOfRange { memory, lo, hi });
        }
        let m = memory.clamp(lo, hi);
        let bp = &self.breakpoints;
        let i = bp.partition_point(|p| p.memory <= m);
        if i == 0 {
            return Ok(bp[0].rate);
        }
        if i == bp.len() {
            return Ok(bp[bp.len() - 1].rate);
        }
        let (a, b) = (bp[i - 1], bp[i]);
        let w = (m - a.memory) / (b.memory - a.memory);
        Ok(a.rate + w * (b.rate - a.rate))
    }

    /// Slopes of consecutive segments.
    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].rate - w[0].rate) / (w[1].memory - w[0].memory))
            .collect()
    }
}

/// Orientation of `c` relative to the directed line `a -> b`; positive when
/// `b` lies below the chord from `a` to `c`.
fn cross(a: RateMemoryPoint, b: RateMemoryPoint, c: RateMemoryPoint) -> f64 {
    (b.memory - a.memory) * (c.rate - a.rate) - (b.rate - a.rate) * (c.memory - a.memory)
}

fn collinear_scale(a: RateMemoryPoint, c: RateMemoryPoint) -> f64 {
    let dx = (c.memory - a.memory).abs().max(1.0);
    let dy = (c.rate - a.rate).abs().max(1.0);
    1e-12 * dx * dy
}

/// Least concave majorant of `points` on their memory range.
///
/// The returned breakpoints are a subset of the input; points on or below a
/// chord are dropped.
pub fn upper_hull(points: &[RateMemoryPoint]) -> Result<PiecewiseLinearBound, BoundsError> {
    if points.is_empty() {
        return Err(BoundsError::Empty);
    }
    if points.iter().any(|p| !p.memory.is_finite() || !p.rate.is_finite()) {
        return Err(BoundsError::NonFinite);
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.memory.total_cmp(&b.memory).then(b.rate.total_cmp(&a.rate)));
    // one point per abscissa, the highest
    sorted.dedup_by(|later, earlier| (later.memory - earlier.memory).abs() <= TOL);

    let mut hull: Vec<RateMemoryPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if cross(a, b, p) >= -collinear_scale(a, p) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    PiecewiseLinearBound::new(hull, BoundKind::Lower)
}

fn simplify_collinear(points: Vec<RateMemoryPoint>) -> Vec<RateMemoryPoint> {
    let mut out: Vec<RateMemoryPoint> = Vec::with_capacity(points.len());
    for p in points {
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            if cross(a, b, p).abs() <= collinear_scale(a, p) {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

/// Lower envelope `min_i (intercept_i + slope_i * M)` on `[0, m_max]` as a
/// piecewise-linear bound.
pub(crate) fn min_of_lines(
    lines: &[(f64, f64)],
    m_max: f64,
    kind: BoundKind,
) -> Result<PiecewiseLinearBound, BoundsError> {
    let eval = |m: f64| lines.iter().map(|&(c, s)| c + s * m).fold(f64::INFINITY, f64::min);
    let mut xs = vec![0.0, m_max];
    for (i, &(c1, s1)) in lines.iter().enumerate() {
        for &(c2, s2) in &lines[i + 1..] {
            if (s1 - s2).abs() > 0.0 {
                let m = (c2 - c1) / (s1 - s2);
                if m > 0.0 && m < m_max {
                    xs.push(m);
                }
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= TOL);
    let pts: Vec<RateMemoryPoint> = xs.into_iter().map(|m| RateMemoryPoint::new(m, eval(m))).collect();
    PiecewiseLinearBound::new(simplify_collinear(pts), kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<RateMemoryPoint> {
        v.iter().map(|&(m, r)| RateMemoryPoint::new(m, r)).collect()
    }

    fn as_pairs(b: &PiecewiseLinearBound) -> Vec<(f64, f64)> {
        b.breakpoints().iter().map(|p| (p.memory, p.rate)).collect()
    }

    #[test]
    fn drops_collinear_interior() {
        let h = upper_hull(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])).unwrap();
        assert_eq!(as_pairs(&h), vec![(0.0, 0.0), (2.0, 2.0)]);
    }

    #[test]
    fn drops_point_below_chord() {
        let h = upper_hull(&pts(&[(0.0, 1.0), (1.0, 0.5), (2.0, 2.0)])).unwrap();
        assert_eq!(as_pairs(&h), vec![(0.0, 1.0), (2.0, 2.0)]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(upper_hull(&[]), Err(BoundsError::Empty)));
    }

    #[test]
    fn single_point_evaluates_only_there() {
        let h = upper_hull(&pts(&[(1.0, 3.0)])).unwrap();
        assert_eq!(h.eval(1.0).unwrap(), 3.0);
        assert!(h.eval(1.5).is_err());
    }

    #[test]
    fn interpolates_and_rejects_out_of_range() {
        let h = upper_hull(&pts(&[(0.0, 0.25), (2.0548, 0.3836)])).unwrap();
        assert!((h.eval(1.0274).unwrap() - 0.3168).abs() < 1e-12);
        assert!(h.eval(-0.1).is_err());
        assert!(h.eval(2.1).is_err());
    }

    #[test]
    fn min_of_lines_tracks_envelope() {
        let b = min_of_lines(&[(1.0, 1.0), (2.0, 0.0)], 3.0, BoundKind::Upper).unwrap();
        assert_eq!(as_pairs(&b), vec![(0.0, 1.0), (1.0, 2.0), (3.0, 2.0)]);
    }

    proptest! {
        #[test]
        fn hull_is_concave_majorant(raw in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..30)) {
            let p = pts(&raw);
            let h = upper_hull(&p).unwrap();
            let s = h.slopes();
            for w in s.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            for q in &p {
                prop_assert!(h.eval(q.memory).unwrap() >= q.rate - 1e-9);
            }
            for b in h.breakpoints() {
                prop_assert!(p.iter().any(|q| q == b));
            }
        }
    }
}
