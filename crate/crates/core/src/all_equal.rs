//! Rate-memory region when every receiver demands the same file.
//!
//! With `M_{k,d}` bits per channel use of file `d` cached at receiver `k`,
//! rates `R_1..R_D` are achievable when for every file `d`
//! `R_d <= max_P min_k (I(X; Y_k) + M_{k,d})` and every receiver respects
//! its budget `sum_d M_{k,d} <= M_k`. For erasure channels with `F`-bit
//! packets the uniform input maximizes every `I(X; Y_k) = (1 - delta_k) F`
//! at once, so the region is explicit.

use crate::bits::Bits;
use crate::erasure_net::{decode_packets, packetize, transmit, CodeLayout, Framing, LinearCodebook};
use crate::model::file_bits;
use crate::seed::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

const STOCHASTIC_TOL: f64 = 1e-12;
/// Largest input alphabet the maximin solver accepts.
pub const MAX_INPUTS: usize = 64;
const RESTARTS: u64 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllEqualError {
    #[error("channel {receiver}: {reason}")]
    NotStochastic { receiver: usize, reason: String },
    #[error("input alphabet of {0} symbols exceeds {MAX_INPUTS}")]
    AlphabetTooLarge(usize),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("receiver {receiver} needs {deficit} more bits per channel use of cache")]
    Infeasible { receiver: usize, deficit: f64 },
}

/// A discrete memoryless broadcast channel given by its marginals
/// `P(Y_k | X)`, each a row-stochastic `|X| x |Y_k|` matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmbcSpec {
    pub inputs: usize,
    /// `channels[k][x][y]`.
    pub channels: Vec<Vec<Vec<f64>>>,
}

impl DmbcSpec {
    pub fn new(channels: Vec<Vec<Vec<f64>>>) -> Result<Self, AllEqualError> {
        let inputs = channels.first().map_or(0, Vec::len);
        if inputs == 0 {
            return Err(AllEqualError::Malformed("no receivers or empty input alphabet".into()));
        }
        if inputs > MAX_INPUTS {
            return Err(AllEqualError::AlphabetTooLarge(inputs));
        }
        for (k, w) in channels.iter().enumerate() {
            let bad = |reason: String| AllEqualError::NotStochastic { receiver: k, reason };
            if w.len() != inputs {
                return Err(bad(format!("{} rows, expected {inputs}", w.len())));
            }
            let outputs = w[0].len();
            for (x, row) in w.iter().enumerate() {
                if row.len() != outputs {
                    return Err(bad(format!("row {x} has {} entries, expected {outputs}", row.len())));
                }
                if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                    return Err(bad(format!("row {x} has a negative or non-finite entry")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(bad(format!("row {x} sums to {sum}")));
                }
            }
        }
        Ok(Self { inputs, channels })
    }

    /// Packet erasure channels on `F`-bit packets: input alphabet `2^F`,
    /// outputs the packet or an erasure symbol.
    pub fn erasure(deltas: &[f64], packet_bits: u32) -> Result<Self, AllEqualError> {
        if packet_bits == 0 || packet_bits > 6 {
            return Err(AllEqualError::Malformed(format!("{packet_bits}-bit packets give no alphabet up to {MAX_INPUTS}")));
        }
        let q = 1usize << packet_bits;
        let channels = deltas
            .iter()
            .map(|&d| {
                (0..q)
                    .map(|x| {
                        let mut row = vec![0.0; q + 1];
                        row[x] = 1.0 - d;
                        row[q] = d;
                        row
                    })
                    .collect()
            })
            .collect();
        Self::new(channels)
    }

    pub fn receivers(&self) -> usize {
        self.channels.len()
    }
}

/// `I(X; Y)` in bits for input distribution `p` over channel `w`.
pub fn mutual_information(p: &[f64], w: &[Vec<f64>]) -> f64 {
    let q = output_distribution(p, w);
    p.iter()
        .zip(w)
        .filter(|(&px, _)| px > 0.0)
        .map(|(&px, row)| px * divergence(row, &q))
        .sum()
}

fn output_distribution(p: &[f64], w: &[Vec<f64>]) -> Vec<f64> {
    let mut q = vec![0.0; w[0].len()];
    for (&px, row) in p.iter().zip(w) {
        for (qy, &wy) in q.iter_mut().zip(row) {
            *qy += px * wy;
        }
    }
    q
}

/// `D(row || q)` in bits, with `0 log 0 = 0`.
fn divergence(row: &[f64], q: &[f64]) -> f64 {
    row.iter().zip(q).filter(|(&w, _)| w > 0.0).map(|(&w, &qy)| w * (w / qy).log2()).sum()
}

/// `I(X; Y)` and its gradient in `p`.
fn mi_with_gradient(p: &[f64], w: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let q = output_distribution(p, w);
    let d: Vec<f64> = w.iter().map(|row| divergence(row, &q)).collect();
    let value = p.iter().zip(&d).map(|(a, b)| a * b).sum();
    (value, d.iter().map(|v| v - std::f64::consts::LOG2_E).collect())
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximinResult {
    /// `max_P min_k (I(X; Y_k) + offsets[k])`, in bits per channel use.
    pub value: f64,
    pub input: Vec<f64>,
}

struct Objective<'a> {
    channel: &'a DmbcSpec,
    offsets: &'a [f64],
}

impl Objective<'_> {
    /// Value and a supergradient (the gradient of a minimizing term).
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (w, &m) in self.channel.channels.iter().zip(self.offsets) {
            let (v, g) = mi_with_gradient(p, w);
            if best.as_ref().is_none_or(|b| v + m < b.0) {
                best = Some((v + m, g));
            }
        }
        best.expect("at least one receiver")
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.channel.channels.iter().zip(self.offsets).map(|(w, &m)| mutual_information(p, w) + m).fold(f64::INFINITY, f64::min)
    }
}

/// Projected supergradient ascent with a level-adjusted Polyak step.
fn ascend(obj: &Objective, start: Vec<f64>) -> MaximinResult {
    let mut p = start;
    let (mut f, mut g) = obj.eval(&p);
    let (mut best_f, mut best_p) = (f, p.clone());
    let mut delta = 1.0;
    let mut path = 0.0;
    for _ in 0..20_000 {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let dir: Vec<f64> = g.iter().map(|v| v - mean).collect();
        let norm2: f64 = dir.iter().map(|v| v * v).sum();
        if norm2 < 1e-24 || delta < 1e-9 {
            break;
        }
        let step = (best_f + delta - f) / norm2;
        let next = project_simplex(&p.iter().zip(&dir).map(|(a, b)| a + step * b).collect::<Vec<_>>());
        path += next.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        p = next;
        (f, g) = obj.eval(&p);
        if f >= best_f + 0.5 * delta {
            best_f = f;
            best_p = p.clone();
            path = 0.0;
        } else if path > 2.0 {
            delta *= 0.5;
            path = 0.0;
            p = best_p.clone();
            (f, g) = obj.eval(&p);
        }
        if f > best_f {
            best_f = f;
            best_p = p.clone();
        }
    }
    MaximinResult { value: best_f, input: best_p }
}

/// Solves `max_P min_k (I(X; Y_k) + offsets[k])` from the uniform input
/// and 16 seeded random starts, keeping the best.
pub fn dmbc_maximin_rate(channel: &DmbcSpec, offsets: &[f64]) -> Result<MaximinResult, AllEqualError> {
    if offsets.len() != channel.receivers() {
        return Err(AllEqualError::Malformed(format!("{} offsets for {} receivers", offsets.len(), channel.receivers())));
    }
    if offsets.iter().any(|m| !m.is_finite()) {
        return Err(AllEqualError::Malformed("non-finite offset".into()));
    }
    let obj = Objective { channel, offsets };
    let n = channel.inputs;
    let results: Vec<MaximinResult> = (0..=RESTARTS)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                vec![1.0 / n as f64; n]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(0x6d61_7869, &[r]));
                let e: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            };
            ascend(&obj, start)
        })
        .collect();
    let best = results.into_iter().max_by(|a, b| a.value.total_cmp(&b.value)).expect("restarts");
    debug_assert!((obj.value(&best.input) - best.value).abs() < 1e-9);
    Ok(best)
}

/// Closed form of the maximin for packet erasure channels.
pub fn erasure_maximin_rate(deltas: &[f64], packet_bits: u32, offsets: &[f64]) -> f64 {
    let f = packet_bits as f64;
    deltas.iter().zip(offsets).map(|(&d, &m)| (1.0 - d) * f + m).fold(f64::INFINITY, f64::min)
}

/// `entries[k][d] = M_{k,d}` with per-receiver budgets `M_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryAllocation {
    pub entries: Vec<Vec<f64>>,
    pub budgets: Vec<f64>,
}

impl MemoryAllocation {
    /// Checks shape and signs; budgets are checked by [`erasure_region_check`].
    pub fn new(entries: Vec<Vec<f64>>, budgets: Vec<f64>) -> Result<Self, AllEqualError> {
        if entries.len() != budgets.len() {
            return Err(AllEqualError::Malformed(format!("{} rows for {} budgets", entries.len(), budgets.len())));
        }
        let files = entries.first().map_or(0, Vec::len);
        for (k, row) in entries.iter().enumerate() {
            if row.len() != files {
                return Err(AllEqualError::Malformed(format!("row {k} has {} files, expected {files}", row.len())));
            }
            if row.iter().chain([&budgets[k]]).any(|&m| !m.is_finite() || m < 0.0) {
                return Err(AllEqualError::Malformed(format!("row {k} has a negative or non-finite entry")));
            }
        }
        Ok(Self { entries, budgets })
    }

    pub fn zeros(receivers: usize, files: usize, budgets: Vec<f64>) -> Self {
        Self { entries: vec![vec![0.0; files]; receivers], budgets }
    }

    pub fn receivers(&self) -> usize {
        self.entries.len()
    }

    pub fn files(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn used(&self, receiver: usize) -> f64 {
        self.entries[receiver].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `R_d > (1 - delta_k) F + M_{k,d}`.
    Rate { file: usize, receiver: usize, rate: f64, bound: f64 },
    /// `sum_d M_{k,d} > M_k`.
    Budget { receiver: usize, used: f64, budget: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCheck {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

fn check_shapes(deltas: &[f64], rates: &[f64], allocation: &MemoryAllocation) -> Result<(), AllEqualError> {
    if allocation.receivers() != deltas.len() || allocation.files() != rates.len() {
        return Err(AllEqualError::Malformed(format!(
            "allocation is {}x{}, expected {}x{}",
            allocation.receivers(),
            allocation.files(),
            deltas.len(),
            rates.len()
        )));
    }
    if deltas.iter().any(|d| !(0.0..=1.0).contains(d)) || rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(AllEqualError::Malformed("erasure probabilities must lie in [0, 1] and rates be nonnegative".into()));
    }
    Ok(())
}

/// Checks rates and budgets against the erasure region and lists every violation.
pub fn erasure_region_check(
    deltas: &[f64],
    packet_bits: u32,
    rates: &[f64],
    allocation: &MemoryAllocation,
) -> Result<RegionCheck, AllEqualError> {
    check_shapes(deltas, rates, allocation)?;
    let f = packet_bits as f64;
    let mut violations = Vec::new();
    for (k, &delta) in deltas.iter().enumerate() {
        let used = allocation.used(k);
        if used > allocation.budgets[k] + crate::TOL {
            violations.push(Violation::Budget { receiver: k, used, budget: allocation.budgets[k] });
        }
        for (d, &rate) in rates.iter().enumerate() {
            let bound = (1.0 - delta) * f + allocation.entries[k][d];
            if rate > bound + crate::TOL {
                violations.push(Violation::Rate { file: d, receiver: k, rate, bound });
            }
        }
    }
    Ok(RegionCheck { feasible: violations.is_empty(), violations })
}

/// Whether caching and channel coding done separately support the rates:
/// receiver `k` still needs `R_d - M_{k,d}` over the channel, and one
/// common codeword must reach the worst receiver.
pub fn separate_coding_feasible(deltas: &[f64], packet_bits: u32, rates: &[f64], allocation: &MemoryAllocation) -> Result<bool, AllEqualError> {
    check_shapes(deltas, rates, allocation)?;
    let worst = deltas.iter().map(|&d| (1.0 - d) * packet_bits as f64).fold(f64::INFINITY, f64::min);
    let budgets_ok = (0..deltas.len()).all(|k| allocation.used(k) <= allocation.budgets[k] + crate::TOL);
    Ok(budgets_ok
        && rates.iter().enumerate().all(|(d, &r)| {
            let need = (0..deltas.len()).map(|k| r - allocation.entries[k][d]).fold(f64::NEG_INFINITY, f64::max);
            need <= worst + crate::TOL
        }))
}

/// Smallest allocation for erasure channels: `M_{k,d} = max(0, R_d - (1 - delta_k) F)`.
/// Fails with the receiver whose shortfalls exceed its budget by the most.
pub fn allocate_memory(deltas: &[f64], packet_bits: u32, rates: &[f64], budgets: &[f64]) -> Result<MemoryAllocation, AllEqualError> {
    let capacities: Vec<f64> = deltas.iter().map(|&d| (1.0 - d) * packet_bits as f64).collect();
    shortfall_allocation(&capacities, rates, budgets)
}

/// Best-effort allocation for a general channel: shortfalls against the
/// mutual informations at the input maximizing the worst receiver's.
pub fn allocate_memory_dmbc(channel: &DmbcSpec, rates: &[f64], budgets: &[f64]) -> Result<MemoryAllocation, AllEqualError> {
    let p = dmbc_maximin_rate(channel, &vec![0.0; channel.receivers()])?.input;
    let infos: Vec<f64> = channel.channels.iter().map(|w| mutual_information(&p, w)).collect();
    shortfall_allocation(&infos, rates, budgets)
}

fn shortfall_allocation(capacities: &[f64], rates: &[f64], budgets: &[f64]) -> Result<MemoryAllocation, AllEqualError> {
    if capacities.len() != budgets.len() {
        return Err(AllEqualError::Malformed(format!("{} budgets for {} receivers", budgets.len(), capacities.len())));
    }
    let entries: Vec<Vec<f64>> = capacities.iter().map(|&c| rates.iter().map(|&r| (r - c).max(0.0)).collect()).collect();
    let a = MemoryAllocation::new(entries, budgets.to_vec())?;
    let worst = (0..a.receivers())
        .map(|k| (k, a.used(k) - a.budgets[k]))
        .filter(|&(_, deficit)| deficit > crate::TOL)
        .max_by(|x, y| x.1.total_cmp(&y.1));
    match worst {
        Some((receiver, deficit)) => Err(AllEqualError::Infeasible { receiver, deficit }),
        None => Ok(a),
    }
}

/// Per-receiver result of one prefix-caching delivery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefixOutcome {
    pub success: Vec<bool>,
    /// Receivers that held the whole file in their cache.
    pub from_cache: Vec<bool>,
    pub cached_packets: Vec<usize>,
    pub file_packets: usize,
}

/// Caches the first `floor(n M_{k,d})` bits of every file at receiver `k`
/// and delivers file `demand` to all receivers with one random linear
/// code. The first slots carry the packets no receiver has cached, the rest
/// are dense; each receiver solves for the packets past its prefix.
#[allow(clippy::too_many_arguments)]
pub fn simulate_prefix_caching(
    deltas: &[f64],
    packet_bits: u32,
    rates: &[f64],
    allocation: &MemoryAllocation,
    demand: usize,
    n: usize,
    seed: u64,
) -> Result<PrefixOutcome, AllEqualError> {
    check_shapes(deltas, rates, allocation)?;
    if demand >= rates.len() {
        return Err(AllEqualError::Malformed(format!("demand {demand} out of range")));
    }
    let f = packet_bits as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let file = Bits::random(file_bits(rates[demand], n), &mut rng);
    let source = packetize(&file, f, Framing::Raw);
    let k_src = source.len();
    let cached_packets: Vec<usize> = (0..deltas.len())
        .map(|k| (file_bits(allocation.entries[k][demand], n) / f).min(k_src))
        .collect();
    let common = cached_packets.iter().copied().max().unwrap_or(0);
    let from_cache: Vec<bool> = cached_packets.iter().map(|&p| p == k_src).collect();
    let fresh = k_src - common;
    if fresh > n {
        return Ok(PrefixOutcome { success: from_cache.clone(), from_cache, cached_packets, file_packets: k_src });
    }
    let layout = CodeLayout { unit: fresh, unit_offset: common, ..CodeLayout::dense() };
    let code = LinearCodebook::new(k_src, n, derive_seed(seed, &[1]), layout);
    let outputs = transmit(code.encode(&source, f), deltas, derive_seed(seed, &[2]));
    let success = (0..deltas.len())
        .map(|k| {
            if from_cache[k] {
                return true;
            }
            let known: Vec<(usize, Bits)> = (0..cached_packets[k]).map(|i| (i, source[i].clone())).collect();
            decode_packets(&code, f, &outputs[k], &known).is_ok_and(|p| p == source)
        })
        .collect();
    Ok(PrefixOutcome { success, from_cache, cached_packets, file_packets: k_src })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(e: f64) -> Vec<Vec<f64>> {
        vec![vec![1.0 - e, e], vec![e, 1.0 - e]]
    }

    #[test]
    fn mutual_information_basics() {
        assert!((mutual_information(&[0.5, 0.5], &bsc(0.0)) - 1.0).abs() < 1e-12);
        assert!(mutual_information(&[0.5, 0.5], &bsc(0.5)).abs() < 1e-12);
        let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((mutual_information(&[0.5, 0.5], &bsc(0.11)) - (1.0 - h(0.11))).abs() < 1e-12);
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&[0.9, 0.8, -0.3, 0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|&x| x >= 0.0));
        assert_eq!(project_simplex(&[0.2, 0.3, 0.5]), vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn erasure_solver_matches_closed_form() {
        let ch = DmbcSpec::erasure(&[0.5, 0.1, 0.3], 2).unwrap();
        let off = [0.4, 0.0, 0.1];
        let r = dmbc_maximin_rate(&ch, &off).unwrap();
        assert!((r.value - erasure_maximin_rate(&[0.5, 0.1, 0.3], 2, &off)).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn useless_channel_pins_value() {
        let useless = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let ch = DmbcSpec::new(vec![useless, bsc(0.1)]).unwrap();
        let r = dmbc_maximin_rate(&ch, &[0.3, 0.0]).unwrap();
        assert!((r.value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn region_examples() {
        let a = MemoryAllocation::new(vec![vec![0.2], vec![0.0]], vec![0.2, 0.0]).unwrap();
        let ok = erasure_region_check(&[0.5, 0.0], 1, &[0.7], &a).unwrap();
        assert!(ok.feasible);
        let over = erasure_region_check(&[0.5, 0.0], 1, &[0.71], &a).unwrap();
        assert!(matches!(over.violations[..], [Violation::Rate { file: 0, receiver: 0, .. }]));
        let greedy = MemoryAllocation::new(vec![vec![0.2], vec![0.0]], vec![0.1, 0.0]).unwrap();
        let b = erasure_region_check(&[0.5, 0.0], 1, &[0.5], &greedy).unwrap();
        assert!(matches!(b.violations[..], [Violation::Budget { receiver: 0, .. }]));
        assert!(MemoryAllocation::new(vec![vec![-0.1]], vec![1.0]).is_err());
    }

    #[test]
    fn shortfall_allocation_examples() {
        let a = allocate_memory(&[0.5, 0.0], 1, &[0.7, 0.6], &[0.3, 0.0]).unwrap();
        assert!((a.entries[0][0] - 0.2).abs() < 1e-12 && (a.entries[0][1] - 0.1).abs() < 1e-12);
        assert!(erasure_region_check(&[0.5, 0.0], 1, &[0.7, 0.6], &a).unwrap().feasible);
        let zero = allocate_memory(&[0.5, 0.0], 1, &[0.4, 0.5], &[0.0, 0.0]).unwrap();
        assert!(zero.entries.iter().flatten().all(|&m| m == 0.0));
        match allocate_memory(&[0.5, 0.0], 1, &[0.7, 0.6], &[0.25, 0.0]) {
            Err(AllEqualError::Infeasible { receiver: 0, deficit }) => assert!((deficit - 0.05).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn joint_beats_separate_on_unequal_caches() {
        let a = MemoryAllocation::new(vec![vec![0.3], vec![0.0]], vec![0.3, 0.0]).unwrap();
        assert!(erasure_region_check(&[0.5, 0.0], 1, &[0.7], &a).unwrap().feasible);
        assert!(!separate_coding_feasible(&[0.5, 0.0], 1, &[0.7], &a).unwrap());
    }

    #[test]
    fn prefix_caching_small() {
        let deltas = [0.5, 0.1];
        let rates = [0.95 * 0.7 * 8.0];
        let a = allocate_memory(&deltas, 8, &rates, &[10.0, 10.0]).unwrap();
        let out = simulate_prefix_caching(&deltas, 8, &rates, &a, 0, 4000, 3).unwrap();
        assert_eq!(out.success, vec![true, true]);
        let full = MemoryAllocation::new(vec![vec![8.0], vec![0.0]], vec![8.0, 0.0]).unwrap();
        let out = simulate_prefix_caching(&[1.0, 0.0], 8, &[4.0], &full, 0, 1000, 3).unwrap();
        assert_eq!(out.from_cache, vec![true, false]);
        assert_eq!(out.success, vec![true, true]);
    }
}
