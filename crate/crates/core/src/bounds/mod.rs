//! Closed-form bounds on the capacity-memory tradeoff `C(M)`.
//!
//! Rates and memories are in bits per channel use. Every function validates
//! its configuration first; the configuration's memory field is ignored by the
//! curve builders, which cover the whole nontrivial range
//! `[0, D F (1 - delta_s) / K_s]`.

mod export;
mod hull;
mod special;

pub use export::{bounds_json, bounds_table, format_sig6, parse_bounds_csv, BoundsTable, GridSpec};
pub use hull::{upper_hull, BoundKind, PiecewiseLinearBound};
pub use special::{single_weak_bounds, two_user_two_file_bounds, SingleWeakBounds, TwoUserBounds};

use crate::model::{ModelError, NetworkConfig, RateMemoryPoint};
use crate::TOL;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the bound needs at least one strong receiver")]
    NoStrongReceivers,
    #[error("weak receivers with erasure probability 1 receive nothing; the bound is degenerate")]
    DeadWeakChannel,
    #[error("bound needs {expected}, got {got}")]
    Topology { expected: &'static str, got: String },
    #[error("memory {memory} outside the bound's range [{lo}, {hi}]")]
    OutOfRange { memory: f64, lo: f64, hi: f64 },
    #[error("no points given")]
    Empty,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("breakpoint memories must be strictly increasing")]
    NotIncreasing,
    #[error("{0} receivers exceed the exhaustive subset limit of 20")]
    TooManyReceivers(usize),
    #[error("receiver {0} has a positive rate but erasure probability 1")]
    DeadReceiverWithRate(usize),
    #[error("inputs have mismatched lengths")]
    LengthMismatch,
    #[error("invalid input: {0}")]
    Invalid(String),
}

struct Params {
    kw: f64,
    ks: f64,
    dw: f64,
    ds: f64,
    f: f64,
    d: f64,
    k_weak: usize,
}

fn params(config: &NetworkConfig, need_strong: bool) -> Result<Params, BoundsError> {
    let c = config.validate()?.config;
    if need_strong && c.k_strong == 0 {
        return Err(BoundsError::NoStrongReceivers);
    }
    if c.delta_weak >= 1.0 {
        return Err(BoundsError::DeadWeakChannel);
    }
    Ok(Params {
        kw: c.k_weak as f64,
        ks: c.k_strong as f64,
        dw: c.delta_weak,
        ds: c.delta_strong,
        f: c.f(),
        d: c.num_files as f64,
        k_weak: c.k_weak,
    })
}

/// `(delta_w - delta_s) / (1 - delta_w)`, exactly zero when the classes coincide.
pub(crate) fn erasure_gap_ratio(delta_weak: f64, delta_strong: f64) -> f64 {
    if delta_weak == delta_strong {
        0.0
    } else {
        (delta_weak - delta_strong) / (1.0 - delta_weak)
    }
}

/// The `K_w + 2` rate-memory pairs whose upper hull is achievable with joint
/// cache-channel coding: the cache-free point, one point per parameter
/// `t = 1..=K_w`, and the point where only the strong receivers limit the rate.
pub fn joint_lower_points(config: &NetworkConfig) -> Result<Vec<RateMemoryPoint>, BoundsError> {
    let p = params(config, true)?;
    let r = erasure_gap_ratio(p.dw, p.ds);
    let mut out = Vec::with_capacity(p.k_weak + 2);
    out.push(RateMemoryPoint::new(0.0, cache_free_rate(&p)));
    for t in 1..=p.k_weak {
        let t = t as f64;
        let a = (p.kw - t + 1.0) / (t * p.ks) * r;
        let b = (p.kw - t) / ((t + 1.0) * p.ks) * r;
        let rate = p.f * (1.0 - p.dw) * (1.0 + a)
            / ((p.kw - t + 1.0) / t * (1.0 + b) + p.ks * (1.0 - p.dw) / (1.0 - p.ds));
        let memory = rate * p.d / p.kw * (t - 1.0 / (1.0 + a));
        out.push(RateMemoryPoint::new(memory, rate));
    }
    let top = p.f * (1.0 - p.ds) / p.ks;
    out.push(RateMemoryPoint::new(p.d * top, top));
    Ok(out)
}

fn cache_free_rate(p: &Params) -> f64 {
    p.f / (p.kw / (1.0 - p.dw) + p.ks / (1.0 - p.ds))
}

/// Rate-memory pairs of coded caching followed by a separate erasure code,
/// for `t = 0..=K_w`.
pub fn separate_lower_points(config: &NetworkConfig) -> Result<Vec<RateMemoryPoint>, BoundsError> {
    let p = params(config, false)?;
    Ok((0..=p.k_weak)
        .map(|t| {
            let t = t as f64;
            let rate = p.f / ((p.kw - t) / ((t + 1.0) * (1.0 - p.dw)) + p.ks / (1.0 - p.ds));
            RateMemoryPoint::new(p.d * t * rate / p.kw, rate)
        })
        .collect())
}

pub fn joint_lower_bound(config: &NetworkConfig) -> Result<PiecewiseLinearBound, BoundsError> {
    upper_hull(&joint_lower_points(config)?)
}

/// Separate-coding hull, extended flat to the end of the nontrivial range.
pub fn separate_lower_bound(config: &NetworkConfig) -> Result<PiecewiseLinearBound, BoundsError> {
    let mut pts = separate_lower_points(config)?;
    if let Some(top) = config.trivial_memory() {
        let last = *pts.last().expect("at least the cache-free point");
        if top > last.memory + TOL {
            pts.push(RateMemoryPoint::new(top, last.rate));
        }
    }
    upper_hull(&pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverseValue {
    pub rate: f64,
    /// Number of weak receivers in the minimizing term.
    pub k_weak: usize,
}

fn converse_terms(p: &Params) -> Vec<(f64, f64)> {
    (0..=p.k_weak)
        .map(|kw| {
            let kw = kw as f64;
            let denom = kw / (1.0 - p.dw) + p.ks / (1.0 - p.ds);
            let intercept = if denom > 0.0 { p.f / denom } else { f64::INFINITY };
            (intercept, kw / p.d)
        })
        .collect()
}

/// Upper bound `min_{k_w} F / (k_w/(1-delta_w) + K_s/(1-delta_s)) + k_w M / D`.
/// Ties go to the larger `k_w`.
pub fn converse_upper_bound(config: &NetworkConfig, memory: f64) -> Result<ConverseValue, BoundsError> {
    let p = params(config, false)?;
    if !memory.is_finite() || memory < 0.0 {
        return Err(BoundsError::Invalid(format!("memory {memory}")));
    }
    let mut best = ConverseValue { rate: f64::INFINITY, k_weak: 0 };
    for (kw, (c, s)) in converse_terms(&p).into_iter().enumerate() {
        let v = c + s * memory;
        if v < best.rate - TOL {
            best = ConverseValue { rate: v, k_weak: kw };
        } else if v <= best.rate + TOL {
            best = ConverseValue { rate: best.rate.min(v), k_weak: kw };
        }
    }
    Ok(best)
}

/// The converse as a piecewise-linear function over the nontrivial range.
pub fn converse_upper_curve(config: &NetworkConfig) -> Result<PiecewiseLinearBound, BoundsError> {
    let p = params(config, true)?;
    let top = config.trivial_memory().expect("strong receivers present");
    hull::min_of_lines(&converse_terms(&p), top, BoundKind::Upper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradedBound {
    pub rate: f64,
    /// Minimizing receiver subset, ascending.
    pub subset: Vec<usize>,
}

/// `min` over nonempty receiver subsets `S` of `F / sum_{k in S} 1/(1-delta_k) + M_S / D`
/// for a packet-erasure broadcast channel with per-receiver caches.
pub fn degraded_upper_bound(
    deltas: &[f64],
    memories: &[f64],
    num_files: usize,
    packet_bits: u32,
) -> Result<DegradedBound, BoundsError> {
    let k = deltas.len();
    if k == 0 {
        return Err(BoundsError::Empty);
    }
    if memories.len() != k {
        return Err(BoundsError::LengthMismatch);
    }
    if k > 20 {
        return Err(BoundsError::TooManyReceivers(k));
    }
    if num_files == 0 {
        return Err(BoundsError::Invalid("no files".into()));
    }
    if deltas.iter().chain(memories).any(|v| !v.is_finite() || *v < 0.0) || deltas.iter().any(|&d| d > 1.0) {
        return Err(BoundsError::Invalid("erasure probabilities in [0,1] and nonnegative memories required".into()));
    }
    let inv: Vec<f64> = deltas.iter().map(|&d| 1.0 / (1.0 - d)).collect();
    let f = packet_bits as f64;
    let d = num_files as f64;
    let mut best = DegradedBound { rate: f64::INFINITY, subset: Vec::new() };
    for mask in 1u32..(1u32 << k) {
        let (mut s_inv, mut s_mem) = (0.0, 0.0);
        for i in 0..k {
            if mask >> i & 1 == 1 {
                s_inv += inv[i];
                s_mem += memories[i];
            }
        }
        let v = f / s_inv + s_mem / d;
        if v < best.rate - TOL {
            best = DegradedBound { rate: v, subset: (0..k).filter(|i| mask >> i & 1 == 1).collect() };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub r0: f64,
    pub gamma_local: f64,
    pub gamma_global_sep: f64,
    pub gamma_global_joint: f64,
    /// Memory of the first joint point; the gains describe the slope on `[0, m1]`.
    pub m1: f64,
}

impl GainReport {
    /// Slope of the small-memory lower bound.
    pub fn slope(&self, num_files: usize) -> f64 {
        self.gamma_local * self.gamma_global_sep * self.gamma_global_joint / num_files as f64
    }
}

pub fn small_memory_gains(config: &NetworkConfig) -> Result<GainReport, BoundsError> {
    let p = params(config, true)?;
    let pts = joint_lower_points(config)?;
    Ok(GainReport {
        r0: cache_free_rate(&p),
        gamma_local: p.kw * (1.0 - p.ds) / (p.kw * (1.0 - p.ds) + p.ks * (1.0 - p.dw)),
        gamma_global_sep: (1.0 + p.kw) / 2.0,
        gamma_global_joint: joint_gain(p.kw, p.ks, p.dw, p.ds),
        m1: pts[1].memory,
    })
}

/// Factor contributed by joint cache-channel coding; equals 1 without strong receivers.
pub fn joint_gain(kw: f64, ks: f64, delta_weak: f64, delta_strong: f64) -> f64 {
    1.0 + 2.0 * kw / (1.0 + kw) * ks * (1.0 - delta_weak) / (kw * (1.0 - delta_strong))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub feasible: bool,
    /// `1 - sum_k R_k / ((1 - delta_k) F)`; negative when infeasible.
    pub slack: f64,
}

/// Time-sharing capacity region of the cache-free packet-erasure broadcast channel.
pub fn capacity_region_check(rates: &[f64], deltas: &[f64], packet_bits: u32) -> Result<RegionCheck, BoundsError> {
    if rates.len() != deltas.len() {
        return Err(BoundsError::LengthMismatch);
    }
    let f = packet_bits as f64;
    let mut load = 0.0;
    for (k, (&r, &d)) in rates.iter().zip(deltas).enumerate() {
        if !r.is_finite() || r < 0.0 || !(0.0..=1.0).contains(&d) {
            return Err(BoundsError::Invalid(format!("receiver {k}: rate {r}, erasure probability {d}")));
        }
        if r > 0.0 {
            if d >= 1.0 {
                return Err(BoundsError::DeadReceiverWithRate(k));
            }
            load += r / ((1.0 - d) * f);
        }
    }
    let slack = 1.0 - load;
    Ok(RegionCheck { feasible: slack >= -TOL, slack })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(name: &str) -> NetworkConfig {
        NetworkConfig::preset(name).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fig5_points_against_table() {
        let pts = joint_lower_points(&preset("fig5")).unwrap();
        assert_eq!(pts.len(), 6);
        assert!(close(pts[0].rate, 0.25, 1e-4) && pts[0].memory == 0.0);
        assert!(close(pts[1].memory, 2.0548, 1e-4) && close(pts[1].rate, 0.3836, 1e-4));
        assert!(close(pts[5].memory, 25.0, 1e-12) && close(pts[5].rate, 0.5, 1e-12));
        let sep = separate_lower_points(&preset("fig5")).unwrap();
        assert_eq!(sep.len(), 5);
        assert!(close(sep[1].memory, 4.5455, 1e-4) && close(sep[1].rate, 0.3636, 1e-4));
        assert_eq!(sep[0], pts[0]);
    }

    #[test]
    fn fig5_hull_keeps_all_points() {
        let h = joint_lower_bound(&preset("fig5")).unwrap();
        assert_eq!(h.breakpoints().len(), 6);
        assert!(close(h.eval(0.0).unwrap(), 0.25, 1e-12));
    }

    #[test]
    fn fig7_first_point() {
        let pts = joint_lower_points(&preset("fig7")).unwrap();
        assert!(close(pts[1].memory, 3.7714, 1e-4) && close(pts[1].rate, 0.7429, 1e-4));
    }

    #[test]
    fn symmetric_two_user_cache_free_rate() {
        let c = NetworkConfig {
            k_weak: 1,
            k_strong: 1,
            delta_weak: 0.3,
            delta_strong: 0.3,
            packet_bits: 8,
            num_files: 2,
            memory: 0.0,
        };
        let pts = joint_lower_points(&c).unwrap();
        assert!(close(pts[0].rate, 8.0 * 0.7 / 2.0, 1e-12));
    }

    #[test]
    fn rejects_missing_strong_receivers() {
        let mut c = preset("fig5");
        c.k_strong = 0;
        assert!(matches!(joint_lower_points(&c), Err(BoundsError::NoStrongReceivers)));
        assert!(separate_lower_points(&c).is_ok());
    }

    #[test]
    fn converse_values() {
        let v = converse_upper_bound(&preset("fig7"), 0.0).unwrap();
        assert!(close(v.rate, 10.0 * 0.2 * 0.8 / 2.8, 1e-12));
        assert_eq!(v.k_weak, 1);
        let v = converse_upper_bound(&preset("fig5"), 0.0).unwrap();
        assert!(close(v.rate, 0.25, 1e-12));
        assert_eq!(v.k_weak, 4);
        let c = preset("fig5");
        let v = converse_upper_bound(&c, c.trivial_memory().unwrap()).unwrap();
        assert_eq!(v.k_weak, 0);
        assert!(close(v.rate, 0.5, 1e-12));
    }

    #[test]
    fn converse_curve_matches_pointwise_minimum() {
        for name in ["fig5", "fig6", "fig7", "fig8"] {
            let c = preset(name);
            let curve = converse_upper_curve(&c).unwrap();
            let top = c.trivial_memory().unwrap();
            for i in 0..=200 {
                let m = top * i as f64 / 200.0;
                let a = curve.eval(m).unwrap();
                let b = converse_upper_bound(&c, m).unwrap().rate;
                assert!(close(a, b, 1e-9), "{name} at {m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn degraded_bound_examples() {
        let b = degraded_upper_bound(&[0.5], &[1.0], 2, 10).unwrap();
        assert!(close(b.rate, 5.5, 1e-12));
        // subsets {1}: 0.5 + 0.5, {2}: 0.8, {1,2}: 1/3.25 + 0.5
        let b = degraded_upper_bound(&[0.5, 0.2], &[2.0, 0.0], 4, 1).unwrap();
        let brute = [1.0f64, 0.8, 1.0 / 3.25 + 0.5];
        assert!(close(b.rate, brute.iter().cloned().fold(f64::INFINITY, f64::min), 1e-12));
        assert_eq!(b.subset, vec![1]);
    }

    #[test]
    fn degraded_bound_collapses_on_fig7() {
        let c = preset("fig7");
        let deltas = c.erasure_probabilities();
        let b = degraded_upper_bound(&deltas, &vec![0.0; deltas.len()], c.num_files, c.packet_bits).unwrap();
        assert!(close(b.rate, 0.571428571, 1e-6));
    }

    #[test]
    fn gains_for_fig5() {
        let g = small_memory_gains(&preset("fig5")).unwrap();
        assert!(close(g.gamma_local, 0.5, 1e-12));
        assert!(close(g.gamma_global_sep, 2.5, 1e-12));
        assert!(close(g.gamma_global_joint, 2.6, 1e-12));
        assert!(close(g.slope(50), 0.065, 1e-12));
        assert!(close(joint_gain(4.0, 0.0, 0.8, 0.2), 1.0, 0.0));
        let g = small_memory_gains(&preset("fig7")).unwrap();
        assert_eq!(g.gamma_global_sep, 1.0);
    }

    #[test]
    fn capacity_region_examples() {
        let r = capacity_region_check(&[0.1, 0.8], &[0.8, 0.2], 1).unwrap();
        assert!(!r.feasible && close(r.slack, -0.5, 1e-12));
        let r = capacity_region_check(&[0.0, 0.0], &[0.3, 1.0], 4).unwrap();
        assert!(r.feasible && r.slack == 1.0);
        let r = capacity_region_check(&[0.7], &[0.3], 1).unwrap();
        assert!(r.feasible && close(r.slack, 0.0, 1e-12));
        assert!(capacity_region_check(&[0.1], &[1.0], 1).is_err());
    }

    #[test]
    fn equal_erasure_probabilities_stay_finite() {
        let mut c = preset("fig5");
        c.delta_weak = 0.5;
        c.delta_strong = 0.5;
        for p in joint_lower_points(&c).unwrap() {
            assert!(p.rate.is_finite() && p.memory.is_finite());
        }
    }
}
