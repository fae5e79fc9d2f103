use super::blocks::{packets_for, send, Block, Payload};
use super::plan::{plan_slots, BlockNeed, SlotPlanner};
use super::{check_config, raw_phase_lengths, split_rates, SchemeError};
use crate::bits::Bits;
use crate::cache_codec::{decode, encode_xor, place, subset_masks, xor_for_subset, CacheContent, SubmessageTable, SubsetIndex, XorMessage};
use crate::model::{DemandVector, Library, NetworkConfig};
use serde::Serialize;

/// What one weak receiver stores: its share of the `W^(t)` parts and of
/// the `W^(t-1)` parts.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCache {
    pub upper: CacheContent,
    pub lower: CacheContent,
}

impl JointCache {
    pub fn bits(&self) -> usize {
        self.upper.bits() + self.lower.bits()
    }
}

/// The server's split of the library and the resulting weak-receiver caches.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPlacement {
    pub t: usize,
    /// Length of every `W^(t-1)` part; the `W^(t)` part is the rest of the file.
    pub lower_bits: usize,
    pub upper_bits: usize,
    /// `W^(t)` parts split for coded caching with parameter `t`.
    pub upper: SubmessageTable,
    /// `W^(t-1)` parts split for coded caching with parameter `t - 1`.
    pub lower: SubmessageTable,
    pub caches: Vec<JointCache>,
}

impl JointPlacement {
    /// Largest cache over the weak receivers.
    pub fn memory_bits(&self) -> usize {
        self.caches.iter().map(JointCache::bits).max().unwrap_or(0)
    }
}

pub(crate) fn check_library(config: &NetworkConfig, library: &Library) -> Result<usize, SchemeError> {
    if library.num_files() != config.num_files {
        return Err(SchemeError::Library(format!("{} files, scenario has {}", library.num_files(), config.num_files)));
    }
    let len = library.files.first().map_or(0, Bits::len);
    if library.files.iter().any(|f| f.len() != len) {
        return Err(SchemeError::Library("files differ in length".into()));
    }
    Ok(len)
}

pub(crate) fn check_budget(bits: usize, n: usize, budget: Option<f64>) -> Result<(), SchemeError> {
    if let Some(m) = budget {
        let budget_bits = (m * n as f64 + 1e-6).floor() as usize;
        if bits > budget_bits {
            return Err(SchemeError::MemoryExceeded { needed_bits: bits, budget_bits });
        }
    }
    Ok(())
}

/// Places the library in the weak receivers' caches, checking every cache
/// against `n * config.memory` bits.
pub fn cache_placement(config: &NetworkConfig, t: usize, library: &Library, n: usize) -> Result<JointPlacement, SchemeError> {
    place_joint(config, t, library, n, Some(config.validate()?.config.memory))
}

pub(crate) fn place_joint(
    config: &NetworkConfig,
    t: usize,
    library: &Library,
    n: usize,
    budget: Option<f64>,
) -> Result<JointPlacement, SchemeError> {
    let c = check_config(config, t)?;
    let len = check_library(&c, library)?;
    let (lo, _) = split_rates(&c, t, 1.0)?;
    let lower_bits = (len as f64 * lo).round() as usize;
    let lowers: Vec<Bits> = library.files.iter().map(|f| f.slice(0, lower_bits)).collect();
    let uppers: Vec<Bits> = library.files.iter().map(|f| f.slice(lower_bits, len - lower_bits)).collect();
    let upper = SubmessageTable::split(c.k_weak, t, &uppers)?;
    let lower = SubmessageTable::split(c.k_weak, t - 1, &lowers)?;
    let caches: Vec<JointCache> = place(&upper).into_iter().zip(place(&lower)).map(|(upper, lower)| JointCache { upper, lower }).collect();
    let p = JointPlacement { t, lower_bits, upper_bits: len - lower_bits, upper, lower, caches };
    check_budget(p.memory_bits(), n, budget)?;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubphaseRecord {
    pub subphase: u8,
    pub slots: usize,
    pub codewords: usize,
    /// Per receiver: whether it decoded this subphase, `None` when it takes no part.
    pub decoded: Vec<Option<bool>>,
}

/// One time-sharing period of subphase 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeriodRecord {
    /// The weak receivers whose XOR rides in this period.
    pub subset: Vec<usize>,
    pub start: usize,
    pub slots: usize,
    pub w1_bits: usize,
    pub w2_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeliveryTranscript {
    pub n: usize,
    pub subphases: Vec<SubphaseRecord>,
    pub periods: Vec<PeriodRecord>,
    /// SHA-256 over everything sent and received, hex encoded.
    pub digest: String,
}

impl DeliveryTranscript {
    /// Whether some participant failed in the given subphase.
    pub fn subphase_failed(&self, subphase: u8) -> bool {
        self.subphases.iter().filter(|s| s.subphase == subphase).any(|s| s.decoded.contains(&Some(false)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub transcript: DeliveryTranscript,
    /// Each receiver's estimate of its demanded file.
    pub decoded: Vec<Option<Bits>>,
    pub success: Vec<bool>,
}

fn mask_members(mask: u64) -> Vec<usize> {
    SubsetIndex::from_mask(mask).members
}

pub(crate) fn check_demand(config: &NetworkConfig, demand: &DemandVector) -> Result<(), SchemeError> {
    demand.check(config.num_files)?;
    if demand.len() != config.receivers() {
        return Err(SchemeError::Library(format!("demand has {} entries for {} receivers", demand.len(), config.receivers())));
    }
    Ok(())
}

/// Runs the three subphases over one block of `n` slots.
///
/// The rate used for `SlotPlanner::Proportional` is the file length over
/// `n`, inflated by `margin`.
#[allow(clippy::too_many_arguments)]
pub fn run_delivery(
    config: &NetworkConfig,
    placement: &JointPlacement,
    library: &Library,
    demand: &DemandVector,
    n: usize,
    seed: u64,
    planner: SlotPlanner,
    margin: f64,
) -> Result<Delivery, SchemeError> {
    let t = placement.t;
    let c = check_config(config, t)?;
    let len = check_library(&c, library)?;
    check_demand(&c, demand)?;
    let (kw, ks, f) = (c.k_weak, c.k_strong, c.packet_bits as usize);
    let weak_demand = &demand.0[..kw];
    let strong_demand = &demand.0[kw..];
    let (up, lo) = (&placement.upper, &placement.lower);
    let lo_files: Vec<Bits> = library.files.iter().map(|w| w.slice(0, placement.lower_bits)).collect();

    let mut blocks = Vec::new();
    let mut needs = Vec::new();
    if t < kw {
        let xors = Bits::concat(encode_xor(up, weak_demand)?.iter().map(|x| &x.payload));
        needs.push(BlockNeed { phase: 0, needs: vec![(packets_for(xors.len(), f), c.delta_weak)] });
        blocks.push(Block { phase: 0, payload: Payload::Rlc(xors) });
    }
    let first_period = blocks.len();
    let periods: Vec<u64> = subset_masks(kw, t).collect();
    for (rank, &g) in periods.iter().enumerate() {
        let w1 = xor_for_subset(lo, weak_demand, g)?.payload;
        let w2 = Bits::concat(strong_demand.iter().map(|&d| &up.parts[d][rank]));
        let (k1, k2) = (packets_for(w1.len(), f), packets_for(w2.len(), f));
        needs.push(BlockNeed { phase: 1, needs: vec![(k1, c.delta_weak), (k1 + k2, c.delta_strong)] });
        blocks.push(Block { phase: 1, payload: Payload::Piggyback { w1, w2 } });
    }
    // the strong receivers' W^(t-1) parts share one codeword
    let last = blocks.len();
    let lower_parts = Bits::concat(strong_demand.iter().map(|&d| &lo_files[d]));
    needs.push(BlockNeed { phase: 2, needs: vec![(packets_for(lower_parts.len(), f), c.delta_strong)] });
    blocks.push(Block { phase: 2, payload: Payload::Rlc(lower_parts) });

    let rate = len as f64 / n.max(1) as f64;
    let betas = raw_phase_lengths(&c, t, rate * (1.0 + margin))?.as_array();
    let slots = plan_slots(planner, &needs, &betas, 1, n);
    let sent = send(&blocks, &slots, f, seed, &c.erasure_probabilities());

    let sub_hi = up.sub_len;
    let mut decoded = Vec::with_capacity(c.receivers());
    let mut flags = vec![vec![None; c.receivers()]; 3];
    for k in 0..kw {
        let cache = &placement.caches[k];
        let upper = if t < kw {
            let msg = sent.decode_rlc(k, 0);
            flags[0][k] = Some(msg.is_some());
            msg.and_then(|m| {
                let xors: Vec<XorMessage> = subset_masks(kw, t + 1)
                    .enumerate()
                    .map(|(i, mask)| XorMessage { subset: SubsetIndex::from_mask(mask), payload: m.slice(i * sub_hi, sub_hi) })
                    .collect();
                decode(k, weak_demand, &xors, &cache.upper).ok()
            })
        } else {
            decode(k, weak_demand, &[], &cache.upper).ok()
        };
        let mut xors = Vec::new();
        let mut ok = true;
        for (rank, &g) in periods.iter().enumerate() {
            if g >> k & 1 == 0 {
                continue;
            }
            let side: Option<Vec<&Bits>> = strong_demand.iter().map(|&d| cache.upper.get(d, rank as u64).ok()).collect();
            let w1 = side.and_then(|s| sent.decode_side_info(k, first_period + rank, &Bits::concat(s)));
            match w1 {
                Some(payload) => xors.push(XorMessage { subset: SubsetIndex::from_mask(g), payload }),
                None => ok = false,
            }
        }
        flags[1][k] = Some(ok);
        let lower = if ok { decode(k, weak_demand, &xors, &cache.lower).ok() } else { None };
        decoded.push(lower.zip(upper).map(|(l, u)| Bits::concat([&l, &u])));
    }
    for j in 0..ks {
        let rx = kw + j;
        let mut parts = Vec::with_capacity(periods.len());
        for rank in 0..periods.len() {
            match sent.decode_full(rx, first_period + rank) {
                Some((_, w2)) => parts.push(w2.slice(j * sub_hi, sub_hi)),
                None => break,
            }
        }
        flags[1][rx] = Some(parts.len() == periods.len());
        let upper = (parts.len() == periods.len()).then(|| {
            let mut u = Bits::concat(&parts);
            u.resize(placement.upper_bits);
            u
        });
        let lower = sent.decode_rlc(rx, last).map(|m| m.slice(j * placement.lower_bits, placement.lower_bits));
        flags[2][rx] = Some(lower.is_some());
        decoded.push(lower.zip(upper).map(|(l, u)| Bits::concat([&l, &u])));
    }

    let success: Vec<bool> =
        decoded.iter().zip(&demand.0).map(|(w, &d)| w.as_ref() == Some(&library.files[d])).collect();
    let phase_slots = |p: usize| (0..blocks.len()).filter(|&i| blocks[i].phase == p).map(|i| slots[i]).sum();
    let phase_count = |p: usize| blocks.iter().filter(|b| b.phase == p).count();
    let subphases = (0..3)
        .map(|p| SubphaseRecord { subphase: p as u8 + 1, slots: phase_slots(p), codewords: phase_count(p), decoded: flags[p].clone() })
        .collect();
    let periods = periods
        .iter()
        .enumerate()
        .map(|(rank, &g)| {
            let (w1_bits, w2_bits) = blocks[first_period + rank].payload.bits();
            PeriodRecord {
                subset: mask_members(g),
                start: sent.starts[first_period + rank],
                slots: slots[first_period + rank],
                w1_bits,
                w2_bits,
            }
        })
        .collect();
    let digest = sent.digest(&success);
    Ok(Delivery { transcript: DeliveryTranscript { n, subphases, periods, digest }, decoded, success })
}
