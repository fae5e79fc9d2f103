//! Joint cache-channel coding with parameter `t`, simulated end to end.
//!
//! Each file is split into a part `W^(t-1)` of rate `R^(t-1)` and a part
//! `W^(t)` of rate `R^(t)`. Weak receivers cache the `W^(t)` parts with
//! coded-caching parameter `t` and the `W^(t-1)` parts with parameter `t - 1`.
//! Delivery has three subphases:
//!
//! 1. the coded-caching XORs of the `W^(t)` parts, erasure coded to the weak receivers;
//! 2. one piggyback period per `t`-subset `G` of weak receivers, carrying the
//!    XOR of `W^(t-1)` parts for `G` (decoded by `G` with the second message as
//!    side information) together with the strong receivers' `W^(t)` parts indexed
//!    by `G` (decoded by the strong receivers);
//! 3. the `W^(t-1)` parts of the strong receivers' files, in one codeword
//!    that every strong receiver decodes.
//!
//! Receivers `0..K_w` are weak, `K_w..K_w + K_s` strong.

mod blocks;
mod delivery;
mod plan;
mod refined;
mod separate;
mod simulate;

pub use delivery::{cache_placement, run_delivery, Delivery, DeliveryTranscript, JointCache, JointPlacement, PeriodRecord, SubphaseRecord};
pub use plan::SlotPlanner;
pub use refined::{refined_two_user, refined_two_user_trial, RefinedDelivery, RefinedSplit};
pub use separate::{run_separate_delivery, separate_phase_lengths, separate_placement, simulate_separate};
pub use simulate::{simulate, simulate_refined, PhaseFailures, Simulation, SimulationSettings, SimulationSummary};

use crate::bounds::{erasure_gap_ratio, BoundsError};
use crate::cache_codec::CodecError;
use crate::model::{ModelError, NetworkConfig};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Rate margin used when sizing subphases.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// A constraint on the length of one subphase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseConstraint {
    /// Weak receivers decode the XORs of subphase 1.
    Subphase1Weak,
    /// Weak receivers decode their piggybacked XOR in subphase 2.
    Subphase2Weak,
    /// Strong receivers decode both piggybacked messages in subphase 2.
    Subphase2Strong,
    /// Strong receivers decode their `W^(t-1)` parts in subphase 3.
    Subphase3Strong,
}

impl fmt::Display for PhaseConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseConstraint::Subphase1Weak => "subphase 1 (weak receivers decoding the coded-caching XORs)",
            PhaseConstraint::Subphase2Weak => "subphase 2 (weak receivers decoding their piggybacked XOR)",
            PhaseConstraint::Subphase2Strong => "subphase 2 (strong receivers decoding both piggybacked messages)",
            PhaseConstraint::Subphase3Strong => "subphase 3 (strong receivers decoding their remaining parts)",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("parameter t = {t} outside 1..={k_weak}")]
    TOutOfRange { t: usize, k_weak: usize },
    #[error("the scheme needs at least one strong receiver")]
    NoStrongReceivers,
    #[error("weak receivers with erasure probability 1 cannot be served")]
    DeadWeakChannel,
    #[error("rate {0} must be finite and nonnegative")]
    InvalidRate(f64),
    #[error("infeasible: subphases need {sum:.6} of the block; largest demand from {binding}")]
    Infeasible { sum: f64, binding: PhaseConstraint },
    #[error("cache needs {needed_bits} bits but the budget is {budget_bits} bits")]
    MemoryExceeded { needed_bits: usize, budget_bits: usize },
    #[error("library does not match the scenario: {0}")]
    Library(String),
    #[error("scheme needs {expected}, got {got}")]
    Topology { expected: &'static str, got: String },
}

pub(crate) fn check_config(config: &NetworkConfig, t: usize) -> Result<NetworkConfig, SchemeError> {
    let c = config.validate()?.config;
    if c.k_strong == 0 {
        return Err(SchemeError::NoStrongReceivers);
    }
    if c.delta_weak >= 1.0 {
        return Err(SchemeError::DeadWeakChannel);
    }
    if t == 0 || t > c.k_weak {
        return Err(SchemeError::TOutOfRange { t, k_weak: c.k_weak });
    }
    Ok(c)
}

fn check_rate(rate: f64) -> Result<(), SchemeError> {
    if rate.is_finite() && rate >= 0.0 {
        Ok(())
    } else {
        Err(SchemeError::InvalidRate(rate))
    }
}

/// `(R^(t-1), R^(t))`: the rates of the two parts of each file.
pub fn split_rates(config: &NetworkConfig, t: usize, rate: f64) -> Result<(f64, f64), SchemeError> {
    let c = check_config(config, t)?;
    check_rate(rate)?;
    let (kw, ks, t) = (c.k_weak as f64, c.k_strong as f64, t as f64);
    let ratio = (kw - t + 1.0) / (t * ks) * erasure_gap_ratio(c.delta_weak, c.delta_strong);
    let lower = rate / (1.0 + ratio);
    Ok((lower, rate - lower))
}

/// Fractions of the block taken by the three subphases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseLengths {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// Which receivers determine `beta2`.
    pub beta2_binding: PhaseConstraint,
}

impl PhaseLengths {
    pub fn sum(&self) -> f64 {
        self.beta1 + self.beta2 + self.beta3
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.beta1, self.beta2, self.beta3]
    }

    /// The constraint behind the longest subphase.
    pub fn largest(&self) -> PhaseConstraint {
        if self.beta2 >= self.beta1 && self.beta2 >= self.beta3 {
            self.beta2_binding
        } else if self.beta1 >= self.beta3 {
            PhaseConstraint::Subphase1Weak
        } else {
            PhaseConstraint::Subphase3Strong
        }
    }
}

/// Minimal subphase lengths at exactly `rate`, with no margin and no
/// feasibility check.
pub(crate) fn raw_phase_lengths(config: &NetworkConfig, t: usize, rate: f64) -> Result<PhaseLengths, SchemeError> {
    let (lower, upper) = split_rates(config, t, rate)?;
    let c = config.validate()?.config;
    let (kw, ks, tt, f) = (c.k_weak as f64, c.k_strong as f64, t as f64, c.f());
    let (cw, cs) = (f * (1.0 - c.delta_weak), f * (1.0 - c.delta_strong));
    let beta1 = upper * (kw - tt) / ((tt + 1.0) * cw);
    let weak2 = lower * (kw - tt + 1.0) / (tt * cw);
    let strong2 = (lower * (kw - tt + 1.0) / tt + upper * ks) / cs;
    let (beta2, beta2_binding) = if weak2 > strong2 {
        (weak2, PhaseConstraint::Subphase2Weak)
    } else {
        (strong2, PhaseConstraint::Subphase2Strong)
    };
    Ok(PhaseLengths { beta1, beta2, beta3: lower * ks / cs, beta2_binding })
}

/// Subphase lengths for `rate` inflated by `margin`; infeasible when they
/// exceed the block.
pub fn phase_lengths(config: &NetworkConfig, t: usize, rate: f64, margin: f64) -> Result<PhaseLengths, SchemeError> {
    check_rate(margin)?;
    let p = raw_phase_lengths(config, t, rate * (1.0 + margin))?;
    if p.sum() > 1.0 + crate::TOL {
        return Err(SchemeError::Infeasible { sum: p.sum(), binding: p.largest() });
    }
    Ok(p)
}

/// The parameters of one run of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeParams {
    pub t: usize,
    pub rate: f64,
    pub n: usize,
    pub beta: [f64; 3],
    pub rate_lower: f64,
    pub rate_upper: f64,
    pub margin: f64,
}

impl SchemeParams {
    /// Fails when the subphases do not fit.
    pub fn new(config: &NetworkConfig, t: usize, rate: f64, n: usize, margin: f64) -> Result<Self, SchemeError> {
        let p = phase_lengths(config, t, rate, margin)?;
        let (rate_lower, rate_upper) = split_rates(config, t, rate)?;
        Ok(Self { t, rate, n, beta: p.as_array(), rate_lower, rate_upper, margin })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::joint_lower_points;
    use proptest::prelude::*;

    #[test]
    fn split_example() {
        let c = NetworkConfig::preset("fig7").unwrap();
        let (lo, hi) = split_rates(&c, 1, 1.0).unwrap();
        assert!((lo - 1.0 / 1.3).abs() < 1e-12 && (hi - 0.3 / 1.3).abs() < 1e-12);
        let eq = NetworkConfig { delta_strong: 0.8, ..c };
        assert_eq!(split_rates(&eq, 1, 0.7).unwrap(), (0.7, 0.0));
    }

    #[test]
    fn betas_fill_block_at_joint_points() {
        for name in ["fig5", "fig6", "fig7", "fig8"] {
            let c = NetworkConfig::preset(name).unwrap();
            let pts = joint_lower_points(&c).unwrap();
            for t in 1..=c.k_weak {
                let p = phase_lengths(&c, t, pts[t].rate, 0.0).unwrap();
                assert!((p.sum() - 1.0).abs() < 1e-9, "{name} t={t}: {}", p.sum());
                if t == c.k_weak {
                    assert_eq!(p.beta1, 0.0);
                }
                let over = phase_lengths(&c, t, 1.1 * pts[t].rate, 0.0);
                assert!(matches!(over, Err(SchemeError::Infeasible { .. })));
            }
        }
    }

    #[test]
    fn margin_inflates_rate() {
        let c = NetworkConfig::preset("fig7").unwrap();
        let r1 = joint_lower_points(&c).unwrap()[1].rate;
        let p = phase_lengths(&c, 1, 0.95 * r1, DEFAULT_MARGIN).unwrap();
        assert!((p.sum() - 0.95 * 1.05).abs() < 1e-9);
        let err = phase_lengths(&c, 1, 1.2 * r1, DEFAULT_MARGIN).unwrap_err();
        assert!(err.to_string().contains("subphase"));
    }

    proptest! {
        #[test]
        fn split_sums_to_rate(kw in 1usize..8, ks in 1usize..12, dw in 0.0f64..0.99, frac in 0.0f64..1.0, rate in 0.0f64..20.0, t in 1usize..8) {
            let c = NetworkConfig { k_weak: kw, k_strong: ks, delta_weak: dw, delta_strong: dw * frac, packet_bits: 4, num_files: kw + ks, memory: 0.0 };
            let t = t.min(kw);
            let (lo, hi) = split_rates(&c, t, rate).unwrap();
            prop_assert!((lo + hi - rate).abs() <= 1e-12 * rate.max(1.0));
            prop_assert!(lo >= 0.0 && hi >= -1e-12);
        }
    }
}
