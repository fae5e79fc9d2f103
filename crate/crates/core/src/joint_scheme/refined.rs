//! Refined scheme for one weak and one strong receiver and two files.
//!
//! Each file `W_d` splits into `W_d^(1)` of rate proportional to
//! `delta_w - delta_s` and `W_d^(2)` of rate proportional to `1 - delta_w`.
//! The weak receiver caches `W_1^(1)`, `W_2^(1)` and `W_1^(2) xor W_2^(2)`.
//! One piggyback codeword carries `W_{d2}^(2)` (first message) and
//! `W_{d2}^(1)` (second message): the strong receiver decodes both, the weak
//! receiver decodes the first using its cached copy of the second and, when
//! the demands differ, recovers `W_{d1}^(2)` through the cached XOR.

use super::blocks::{send, Block, Payload};
use super::delivery::{check_budget, check_demand, check_library, Delivery, DeliveryTranscript, SubphaseRecord};
use super::SchemeError;
use crate::bits::Bits;
use crate::model::{DemandVector, Library, NetworkConfig};

fn check(config: &NetworkConfig) -> Result<NetworkConfig, SchemeError> {
    let c = config.validate()?.config;
    if c.k_weak != 1 || c.k_strong != 1 || c.num_files != 2 {
        return Err(SchemeError::Topology {
            expected: "one weak receiver, one strong receiver and two files",
            got: format!("K_w={}, K_s={}, D={}", c.k_weak, c.k_strong, c.num_files),
        });
    }
    if c.delta_weak >= 1.0 {
        return Err(SchemeError::DeadWeakChannel);
    }
    Ok(c)
}

/// Per-file rate `rate_fraction * F (1 - delta_s)`.
pub(crate) fn refined_rate(config: &NetworkConfig, rate_fraction: f64) -> Result<f64, SchemeError> {
    let c = check(config)?;
    Ok(rate_fraction * c.f() * (1.0 - c.delta_strong))
}

/// Bit lengths of the two parts of a file of `len` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefinedSplit {
    pub part1_bits: usize,
    pub part2_bits: usize,
}

impl RefinedSplit {
    pub fn new(config: &NetworkConfig, len: usize) -> Result<Self, SchemeError> {
        let c = check(config)?;
        let share = if c.delta_weak == c.delta_strong {
            0.0
        } else {
            (c.delta_weak - c.delta_strong) / (1.0 - c.delta_strong)
        };
        let part1_bits = (len as f64 * share).round() as usize;
        Ok(Self { part1_bits, part2_bits: len - part1_bits })
    }

    /// Bits the weak receiver stores.
    pub fn cache_bits(&self) -> usize {
        2 * self.part1_bits + self.part2_bits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedDelivery {
    pub delivery: Delivery,
    pub split: RefinedSplit,
    pub cache_bits: usize,
    /// Whether the weak receiver needed the cached XOR.
    pub xor_branch: bool,
}

/// Runs the refined scheme for one demand vector `(d1, d2)`.
pub fn refined_two_user(
    config: &NetworkConfig,
    library: &Library,
    demand: &DemandVector,
    n: usize,
    seed: u64,
) -> Result<RefinedDelivery, SchemeError> {
    let c = check(config)?;
    let len = check_library(&c, library)?;
    check_demand(&c, demand)?;
    let split = RefinedSplit::new(&c, len)?;
    let p1 = split.part1_bits;
    check_budget(split.cache_bits(), n, (c.memory > 0.0).then_some(c.memory))?;
    let part1 = |d: usize| library.files[d].slice(0, p1);
    let part2 = |d: usize| library.files[d].slice(p1, len - p1);
    // cache of the weak receiver
    let cached1 = [part1(0), part1(1)];
    let cached_xor = part2(0).xor(&part2(1));

    let (d1, d2) = (demand.0[0], demand.0[1]);
    let blocks = [Block { phase: 0, payload: Payload::Piggyback { w1: part2(d2), w2: part1(d2) } }];
    let sent = send(&blocks, &[n], c.packet_bits as usize, seed, &c.erasure_probabilities());

    let xor_branch = d1 != d2;
    let weak = sent.decode_side_info(0, 0, &cached1[d2]).map(|w| {
        let own2 = if xor_branch { w.xor(&cached_xor) } else { w };
        Bits::concat([&cached1[d1], &own2])
    });
    let strong = sent.decode_full(1, 0).map(|(w1, w2)| Bits::concat([&w2, &w1]));
    let decoded = vec![weak, strong];
    let success: Vec<bool> = decoded.iter().zip(&demand.0).map(|(w, &d)| w.as_ref() == Some(&library.files[d])).collect();
    let record = SubphaseRecord {
        subphase: 1,
        slots: n,
        codewords: 1,
        decoded: decoded.iter().map(|w| Some(w.is_some())).collect(),
    };
    let digest = sent.digest(&success);
    Ok(RefinedDelivery {
        delivery: Delivery { transcript: DeliveryTranscript { n, subphases: vec![record], periods: Vec::new(), digest }, decoded, success },
        split,
        cache_bits: split.cache_bits(),
        xor_branch,
    })
}

/// One trial at `rate_fraction` of `F (1 - delta_s)` with a fresh library.
pub fn refined_two_user_trial(
    config: &NetworkConfig,
    rate_fraction: f64,
    demand: &DemandVector,
    n: usize,
    seed: u64,
) -> Result<RefinedDelivery, SchemeError> {
    let rate = refined_rate(config, rate_fraction)?;
    let lib = Library::random_symmetric(2, rate, n, crate::seed::derive_seed(seed, &[0]));
    refined_two_user(config, &lib, demand, n, crate::seed::derive_seed(seed, &[1]))
}
