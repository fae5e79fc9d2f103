//! Baseline: coded caching with parameter `t` on whole files, followed by
//! plain erasure coding. Phase 1 multicasts the XORs to the weak receivers,
//! phase 2 sends the strong receivers' files in one codeword.

use super::blocks::{packets_for, send, Block, Payload};
use super::delivery::{check_budget, check_demand, check_library, Delivery, DeliveryTranscript, SubphaseRecord};
use super::plan::{plan_slots, BlockNeed, SlotPlanner};
use super::simulate::{run_trials, SimulationSettings, Simulation, TrialOutcome};
use super::SchemeError;
use crate::bits::Bits;
use crate::bounds::separate_lower_points;
use crate::cache_codec::{decode, encode_xor, place, subset_masks, CacheContent, SubmessageTable, SubsetIndex, XorMessage};
use crate::model::{DemandVector, Library, NetworkConfig};

fn check(config: &NetworkConfig, t: usize) -> Result<NetworkConfig, SchemeError> {
    let c = config.validate()?.config;
    if c.delta_weak >= 1.0 {
        return Err(SchemeError::DeadWeakChannel);
    }
    if t > c.k_weak {
        return Err(SchemeError::TOutOfRange { t, k_weak: c.k_weak });
    }
    Ok(c)
}

/// Fractions of the block for the multicast and the unicast phase, without margin.
pub fn separate_phase_lengths(config: &NetworkConfig, t: usize, rate: f64) -> Result<[f64; 2], SchemeError> {
    let c = check(config, t)?;
    let (kw, tt, f) = (c.k_weak as f64, t as f64, c.f());
    Ok([
        rate * (kw - tt) / ((tt + 1.0) * f * (1.0 - c.delta_weak)),
        c.k_strong as f64 * rate / (f * (1.0 - c.delta_strong)),
    ])
}

/// Coded-caching placement with parameter `t` over whole files; `t = 0` caches nothing.
pub fn separate_placement(
    config: &NetworkConfig,
    t: usize,
    library: &Library,
    n: usize,
) -> Result<(SubmessageTable, Vec<CacheContent>), SchemeError> {
    let c = check(config, t)?;
    place_separate(&c, t, library, n, Some(c.memory))
}

pub(crate) fn place_separate(
    c: &NetworkConfig,
    t: usize,
    library: &Library,
    n: usize,
    budget: Option<f64>,
) -> Result<(SubmessageTable, Vec<CacheContent>), SchemeError> {
    check_library(c, library)?;
    let table = SubmessageTable::split(c.k_weak, t, &library.files)?;
    let caches = place(&table);
    check_budget(caches.iter().map(CacheContent::bits).max().unwrap_or(0), n, budget)?;
    Ok((table, caches))
}

#[allow(clippy::too_many_arguments)]
pub fn run_separate_delivery(
    config: &NetworkConfig,
    table: &SubmessageTable,
    caches: &[CacheContent],
    library: &Library,
    demand: &DemandVector,
    n: usize,
    seed: u64,
    planner: SlotPlanner,
    margin: f64,
) -> Result<Delivery, SchemeError> {
    let t = table.t_tilde;
    let c = check(config, t)?;
    let len = check_library(&c, library)?;
    check_demand(&c, demand)?;
    let (kw, f) = (c.k_weak, c.packet_bits as usize);
    let weak_demand = &demand.0[..kw];

    let mut blocks = Vec::new();
    let mut needs = Vec::new();
    if t < kw {
        let xors = Bits::concat(encode_xor(table, weak_demand)?.iter().map(|x| &x.payload));
        needs.push(BlockNeed { phase: 0, needs: vec![(packets_for(xors.len(), f), c.delta_weak)] });
        blocks.push(Block { phase: 0, payload: Payload::Rlc(xors) });
    }
    let last = blocks.len();
    if c.k_strong > 0 {
        let files = Bits::concat(demand.0[kw..].iter().map(|&d| &library.files[d]));
        needs.push(BlockNeed { phase: 1, needs: vec![(packets_for(files.len(), f), c.delta_strong)] });
        blocks.push(Block { phase: 1, payload: Payload::Rlc(files) });
    }
    let rate = len as f64 / n.max(1) as f64;
    let betas = separate_phase_lengths(&c, t, rate * (1.0 + margin))?;
    let bottleneck = if c.k_strong > 0 { 1 } else { 0 };
    let slots = plan_slots(planner, &needs, &betas, bottleneck, n);
    let sent = send(&blocks, &slots, f, seed, &c.erasure_probabilities());

    let mut flags = vec![vec![None; c.receivers()]; 2];
    let mut decoded = Vec::with_capacity(c.receivers());
    for k in 0..kw {
        let w = if t < kw {
            let msg = sent.decode_rlc(k, 0);
            flags[0][k] = Some(msg.is_some());
            msg.and_then(|m| {
                let xors: Vec<XorMessage> = subset_masks(kw, t + 1)
                    .enumerate()
                    .map(|(i, mask)| XorMessage {
                        subset: SubsetIndex::from_mask(mask),
                        payload: m.slice(i * table.sub_len, table.sub_len),
                    })
                    .collect();
                decode(k, weak_demand, &xors, &caches[k]).ok()
            })
        } else {
            decode(k, weak_demand, &[], &caches[k]).ok()
        };
        decoded.push(w);
    }
    for j in 0..c.k_strong {
        let w = sent.decode_rlc(kw + j, last).map(|m| m.slice(j * len, len));
        flags[1][kw + j] = Some(w.is_some());
        decoded.push(w);
    }
    let success: Vec<bool> =
        decoded.iter().zip(&demand.0).map(|(w, &d)| w.as_ref() == Some(&library.files[d])).collect();
    let subphases = (0..2)
        .map(|p| SubphaseRecord {
            subphase: p as u8 + 1,
            slots: (0..blocks.len()).filter(|&i| blocks[i].phase == p).map(|i| slots[i]).sum(),
            codewords: blocks.iter().filter(|b| b.phase == p).count(),
            decoded: flags[p].clone(),
        })
        .collect();
    let digest = sent.digest(&success);
    Ok(Delivery { transcript: DeliveryTranscript { n, subphases, periods: Vec::new(), digest }, decoded, success })
}

/// Monte Carlo run of the baseline at `rate_fraction` of its own rate for parameter `t`.
pub fn simulate_separate(config: &NetworkConfig, s: &SimulationSettings) -> Result<Simulation, SchemeError> {
    let c = check(config, s.t)?;
    let rate = s.rate_fraction * separate_lower_points(&c)?[s.t].rate;
    let betas = separate_phase_lengths(&c, s.t, rate * (1.0 + s.margin))?;
    let sum: f64 = betas.iter().sum();
    let infeasibility = (sum > 1.0 + crate::TOL).then(|| format!("phases need {sum:.6} of the block"));
    let budget = (c.memory > 0.0).then_some(c.memory);
    run_trials(&c, s, "separate", rate, infeasibility, &["multicast", "unicast"], |lib, demand, seed| {
        let (table, caches) = place_separate(&c, s.t, lib, s.n, budget)?;
        let memory_bits = caches.iter().map(CacheContent::bits).max().unwrap_or(0);
        let delivery = run_separate_delivery(&c, &table, &caches, lib, demand, s.n, seed, s.planner, s.margin)?;
        Ok(TrialOutcome { delivery, memory_bits })
    })
}
