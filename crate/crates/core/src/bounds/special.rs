//! Tighter bounds for one weak receiver, and for one weak plus one strong
//! receiver sharing a two-file library.

use super::{joint_lower_points, params, upper_hull, BoundKind, BoundsError, PiecewiseLinearBound};
use crate::model::{NetworkConfig, RateMemoryPoint};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleWeakBounds {
    pub lower: PiecewiseLinearBound,
    pub upper: PiecewiseLinearBound,
    /// Thresholds on `M / D`: end of the tight regime.
    pub gamma1: f64,
    /// Start of the flat region.
    pub gamma2: f64,
    /// Corner of the upper bound.
    pub gamma3: f64,
}

/// Bounds for `K_w = 1`: both start with slope `1/D`; the lower bound then
/// continues with slope `1/((1+K_s) D)` and the upper bound turns flat.
pub fn single_weak_bounds(config: &NetworkConfig) -> Result<SingleWeakBounds, BoundsError> {
    let p = params(config, true)?;
    if p.k_weak != 1 {
        return Err(BoundsError::Topology { expected: "exactly one weak receiver", got: format!("K_w = {}", p.k_weak) });
    }
    let (ks, dw, ds, f, d) = (p.ks, p.dw, p.ds, p.f, p.d);
    let c = ks * (1.0 - dw) + (1.0 - ds);
    let gamma1 = f * (1.0 - ds) / ks * (dw - ds) / c;
    let gamma2 = f * (1.0 - ds) / ks;
    let gamma3 = f * (1.0 - ds) / ks * (1.0 - ds) / c;
    let base = f * (1.0 - dw) * (1.0 - ds) / c;

    let first = |m: f64| base + m / d;
    let second = |m: f64| f * (1.0 - ds) / (1.0 + ks) + m / ((1.0 + ks) * d);
    let lower = PiecewiseLinearBound::from_chain(
        &[
            RateMemoryPoint::new(0.0, base),
            RateMemoryPoint::new(d * gamma1, first(d * gamma1)),
            RateMemoryPoint::new(d * gamma2, second(d * gamma2)),
        ],
        BoundKind::Lower,
    )?;
    let upper = PiecewiseLinearBound::from_chain(
        &[
            RateMemoryPoint::new(0.0, base),
            RateMemoryPoint::new(d * gamma3, first(d * gamma3)),
            RateMemoryPoint::new(d * gamma2, gamma2),
        ],
        BoundKind::Upper,
    )?;
    Ok(SingleWeakBounds { lower, upper, gamma1, gamma2, gamma3 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoUserBounds {
    pub lower: PiecewiseLinearBound,
    pub upper: PiecewiseLinearBound,
    pub gamma1_tilde: f64,
    pub gamma2_tilde: f64,
}

/// Bounds for one weak and one strong receiver with `D = 2`.
///
/// The lower bound is the hull of the cache-free point, the first joint
/// point, and the point `(2 gamma2_tilde, F (1 - delta_s))` reached by caching
/// one XOR-combined part; it is flat afterwards. The upper bound has three
/// pieces with slopes `1/2`, `1/3` and `0`.
pub fn two_user_two_file_bounds(config: &NetworkConfig) -> Result<TwoUserBounds, BoundsError> {
    let p = params(config, true)?;
    if p.k_weak != 1 || p.ks != 1.0 || p.d != 2.0 {
        return Err(BoundsError::Topology {
            expected: "K_w = K_s = 1 and D = 2",
            got: format!("K_w = {}, K_s = {}, D = {}", p.k_weak, p.ks, p.d),
        });
    }
    let (f, dw, ds) = (p.f, p.dw, p.ds);
    let (cw, cs) = (1.0 - dw, 1.0 - ds);
    let g1t = f * (cw * cw + cs * cs - cw * cs) / (cw + cs);
    let g2t = 0.5 * f * (cs + (dw - ds));
    let g2 = f * cs;
    let base = f * cw * cs / (cw + cs);

    let piece2 = |m: f64| f * (2.0 - ds - dw) / 3.0 + m / 3.0;
    let upper = PiecewiseLinearBound::from_chain(
        &[
            RateMemoryPoint::new(0.0, base),
            RateMemoryPoint::new(2.0 * g1t, base + g1t),
            RateMemoryPoint::new(2.0 * g2t, piece2(2.0 * g2t)),
            RateMemoryPoint::new(2.0 * g2, f * cs),
        ],
        BoundKind::Upper,
    )?;

    let pts = joint_lower_points(config)?;
    let hull = upper_hull(&[pts[0], pts[1], RateMemoryPoint::new(2.0 * g2t, f * cs)])?;
    let mut chain = hull.breakpoints().to_vec();
    chain.push(RateMemoryPoint::new(2.0 * g2, f * cs));
    let lower = PiecewiseLinearBound::from_chain(&chain, BoundKind::Lower)?;
    Ok(TwoUserBounds { lower, upper, gamma1_tilde: g1t, gamma2_tilde: g2t })
}
