//! Scenario types shared by every other module.
//!
//! Receivers are indexed `0..k_weak` (weak, cache-equipped) followed by
//! `k_weak..k_weak + k_strong` (strong, cache-free). File indices are
//! zero-based.

use crate::bits::Bits;
use crate::seed::derive_seed;
use crate::TOL;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("field `{0}` must be finite and nonnegative")]
    InvalidField(&'static str),
    #[error("erasure probabilities must satisfy 0 <= delta_strong <= delta_weak <= 1 (got delta_weak={weak}, delta_strong={strong})")]
    Ordering { weak: f64, strong: f64 },
    #[error("need at least one weak receiver")]
    NoWeakReceivers,
    #[error("packet size must be at least one bit")]
    ZeroPacketBits,
    #[error("library of {files} files is smaller than the {receivers} receivers")]
    TooFewFiles { files: usize, receivers: usize },
    #[error("{count} demand vectors exceed the enumeration cap of {cap}")]
    EnumerationCap { count: f64, cap: usize },
    #[error("demand index {index} out of range for {files} files")]
    DemandOutOfRange { index: usize, files: usize },
    #[error("unknown preset `{0}` (expected fig5, fig6, fig7 or fig8)")]
    UnknownPreset(String),
    #[error("malformed scenario: {0}")]
    Parse(String),
}

/// A broadcast scenario: `k_weak` receivers with erasure probability
/// `delta_weak` and a cache of `memory` bits per channel use each, plus
/// `k_strong` cache-free receivers with erasure probability `delta_strong`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub k_weak: usize,
    pub k_strong: usize,
    pub delta_weak: f64,
    pub delta_strong: f64,
    pub packet_bits: u32,
    pub num_files: usize,
    #[serde(default)]
    pub memory: f64,
}

/// Outcome of [`NetworkConfig::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validated {
    pub config: NetworkConfig,
    /// Original memory value when it was clamped down to the nontrivial range.
    pub clamped_from: Option<f64>,
}

impl NetworkConfig {
    pub fn receivers(&self) -> usize {
        self.k_weak + self.k_strong
    }

    pub fn f(&self) -> f64 {
        self.packet_bits as f64
    }

    /// Upper end of the nontrivial memory range, `D F (1 - delta_s) / K_s`.
    pub fn trivial_memory(&self) -> Option<f64> {
        (self.k_strong > 0).then(|| {
            self.num_files as f64 * self.f() * (1.0 - self.delta_strong) / self.k_strong as f64
        })
    }

    pub fn erasure_probabilities(&self) -> Vec<f64> {
        let mut d = vec![self.delta_weak; self.k_weak];
        d.extend(std::iter::repeat_n(self.delta_strong, self.k_strong));
        d
    }

    pub fn is_weak(&self, receiver: usize) -> bool {
        receiver < self.k_weak
    }

    pub fn with_memory(mut self, memory: f64) -> Self {
        self.memory = memory;
        self
    }

    /// Checks the scenario assumptions and clamps the memory into the
    /// nontrivial range. Idempotent.
    pub fn validate(&self) -> Result<Validated, ModelError> {
        let c = *self;
        for (name, v) in [
            ("delta_weak", c.delta_weak),
            ("delta_strong", c.delta_strong),
            ("memory", c.memory),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidField(name));
            }
        }
        if c.delta_strong > c.delta_weak || c.delta_weak > 1.0 {
            return Err(ModelError::Ordering { weak: c.delta_weak, strong: c.delta_strong });
        }
        if c.k_weak == 0 {
            return Err(ModelError::NoWeakReceivers);
        }
        if c.packet_bits == 0 {
            return Err(ModelError::ZeroPacketBits);
        }
        if c.num_files < c.receivers() {
            return Err(ModelError::TooFewFiles { files: c.num_files, receivers: c.receivers() });
        }
        let mut out = Validated { config: c, clamped_from: None };
        if let Some(top) = c.trivial_memory() {
            if c.memory > top + TOL {
                log::warn!(
                    "memory {} exceeds the nontrivial range; clamping to {top} where the tradeoff is flat",
                    c.memory
                );
                out.config.memory = top;
                out.clamped_from = Some(c.memory);
            }
        }
        Ok(out)
    }

    pub fn preset(name: &str) -> Result<Self, ModelError> {
        let text = match name {
            "fig5" => include_str!("../data/presets/fig5.json"),
            "fig6" => include_str!("../data/presets/fig6.json"),
            "fig7" => include_str!("../data/presets/fig7.json"),
            "fig8" => include_str!("../data/presets/fig8.json"),
            other => return Err(ModelError::UnknownPreset(other.to_string())),
        };
        Self::from_json(text)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }
}

pub const PRESETS: [&str; 4] = ["fig5", "fig6", "fig7", "fig8"];

/// File requested by each receiver, zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemandVector(pub Vec<usize>);

impl DemandVector {
    pub fn check(&self, num_files: usize) -> Result<(), ModelError> {
        match self.0.iter().find(|&&d| d >= num_files) {
            Some(&index) => Err(ModelError::DemandOutOfRange { index, files: num_files }),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandMode {
    /// Every vector in `{0..D}^K`, capped.
    All { cap: usize },
    /// Vectors with pairwise distinct entries, capped.
    Distinct { cap: usize },
    /// Uniform i.i.d. draws.
    Sampled { count: usize, seed: u64 },
}

pub const DEFAULT_ENUMERATION_CAP: usize = 10_000;

impl DemandMode {
    pub fn all() -> Self {
        DemandMode::All { cap: DEFAULT_ENUMERATION_CAP }
    }

    pub fn distinct() -> Self {
        DemandMode::Distinct { cap: DEFAULT_ENUMERATION_CAP }
    }
}

/// Demand vectors of length `K` for the worst-case error criterion.
pub fn enumerate_worst_case_demands(
    config: &NetworkConfig,
    mode: DemandMode,
) -> Result<Vec<DemandVector>, ModelError> {
    enumerate_demands(config.num_files, config.receivers(), mode)
}

pub fn enumerate_demands(
    files: usize,
    receivers: usize,
    mode: DemandMode,
) -> Result<Vec<DemandVector>, ModelError> {
    match mode {
        DemandMode::All { cap } => {
            let count = (files as f64).powi(receivers as i32);
            if count > cap as f64 {
                return Err(ModelError::EnumerationCap { count, cap });
            }
            let mut out = Vec::with_capacity(count as usize);
            let mut cur = vec![0usize; receivers];
            loop {
                out.push(DemandVector(cur.clone()));
                // odometer with the last receiver varying fastest
                let mut pos = receivers;
                loop {
                    if pos == 0 {
                        return Ok(out);
                    }
                    pos -= 1;
                    cur[pos] += 1;
                    if cur[pos] < files {
                        break;
                    }
                    cur[pos] = 0;
                }
            }
        }
        DemandMode::Distinct { cap } => {
            if receivers > files {
                return Ok(Vec::new());
            }
            let count: f64 = (0..receivers).map(|i| (files - i) as f64).product();
            if count > cap as f64 {
                return Err(ModelError::EnumerationCap { count, cap });
            }
            let mut out = Vec::new();
            let mut cur = Vec::with_capacity(receivers);
            let mut used = vec![false; files];
            distinct_rec(files, receivers, &mut cur, &mut used, &mut out);
            Ok(out)
        }
        DemandMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xde3a]));
            Ok((0..count)
                .map(|_| DemandVector((0..receivers).map(|_| rng.gen_range(0..files)).collect()))
                .collect())
        }
    }
}

fn distinct_rec(
    files: usize,
    receivers: usize,
    cur: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<DemandVector>,
) {
    if cur.len() == receivers {
        out.push(DemandVector(cur.clone()));
        return;
    }
    for f in 0..files {
        if !used[f] {
            used[f] = true;
            cur.push(f);
            distinct_rec(files, receivers, cur, used, out);
            cur.pop();
            used[f] = false;
        }
    }
}

/// The file library. Files are independent uniform bit strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    pub files: Vec<Bits>,
    /// Per-file rates in bits per channel use, when known.
    pub rates: Vec<f64>,
    pub blocklength: usize,
}

impl Library {
    /// `num_files` files of `floor(n * rate)` bits each.
    pub fn random_symmetric(num_files: usize, rate: f64, n: usize, seed: u64) -> Self {
        Self::random_with_rates(&vec![rate; num_files], n, seed)
    }

    /// File `d` holds `floor(n * rates[d])` bits.
    pub fn random_with_rates(rates: &[f64], n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x11b]));
        let files = rates
            .iter()
            .map(|&r| Bits::random(file_bits(r, n), &mut rng))
            .collect();
        Self { files, rates: rates.to_vec(), blocklength: n }
    }

    pub fn from_files(files: Vec<Bits>, n: usize) -> Self {
        let rates = files.iter().map(|f| f.len() as f64 / n.max(1) as f64).collect();
        Self { files, rates, blocklength: n }
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }
}

/// `floor(n * rate)` with a small guard against representation error.
pub fn file_bits(rate: f64, n: usize) -> usize {
    (rate * n as f64 + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMemoryPoint {
    pub memory: f64,
    pub rate: f64,
}

impl RateMemoryPoint {
    pub fn new(memory: f64, rate: f64) -> Self {
        Self { memory, rate }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig5() -> NetworkConfig {
        NetworkConfig {
            k_weak: 4,
            k_strong: 16,
            delta_weak: 0.8,
            delta_strong: 0.2,
            packet_bits: 10,
            num_files: 50,
            memory: 0.0,
        }
    }

    #[test]
    fn accepts_fig5_tuple() {
        let v = fig5().validate().unwrap();
        assert_eq!(v.config, fig5());
        assert!(v.clamped_from.is_none());
    }

    #[test]
    fn rejects_reversed_erasure_ordering() {
        let mut c = fig5();
        c.delta_weak = 0.2;
        c.delta_strong = 0.8;
        assert!(matches!(c.validate(), Err(ModelError::Ordering { .. })));
    }

    #[test]
    fn rejects_small_library_and_bad_numbers() {
        let mut c = fig5();
        c.num_files = 19;
        assert!(matches!(c.validate(), Err(ModelError::TooFewFiles { .. })));
        let mut c = fig5();
        c.memory = f64::NAN;
        assert!(c.validate().is_err());
        let mut c = fig5();
        c.delta_weak = -0.1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn clamps_memory_above_trivial_threshold() {
        let c = NetworkConfig {
            k_weak: 1,
            k_strong: 10,
            delta_weak: 0.8,
            delta_strong: 0.2,
            packet_bits: 10,
            num_files: 22,
            memory: 200.0,
        };
        let v = c.validate().unwrap();
        assert!((v.config.memory - 17.6).abs() < 1e-12);
        assert_eq!(v.clamped_from, Some(200.0));
        let again = v.config.validate().unwrap();
        assert_eq!(again.config, v.config);
        assert!(again.clamped_from.is_none());
    }

    #[test]
    fn presets_load_and_validate() {
        for p in PRESETS {
            NetworkConfig::preset(p).unwrap().validate().unwrap();
        }
        assert!(NetworkConfig::preset("fig9").is_err());
        let f7 = NetworkConfig::preset("fig7").unwrap();
        assert_eq!(f7.num_files, 22);
    }

    #[test]
    fn enumerates_all_and_distinct() {
        let all = enumerate_demands(2, 2, DemandMode::all()).unwrap();
        let v: Vec<Vec<usize>> = all.into_iter().map(|d| d.0).collect();
        assert_eq!(v, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let d = enumerate_demands(2, 2, DemandMode::distinct()).unwrap();
        let v: Vec<Vec<usize>> = d.into_iter().map(|d| d.0).collect();
        assert_eq!(v, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn all_mode_respects_cap() {
        assert!(matches!(
            enumerate_demands(50, 20, DemandMode::all()),
            Err(ModelError::EnumerationCap { .. })
        ));
    }

    #[test]
    fn sampled_mode_is_reproducible() {
        let m = DemandMode::Sampled { count: 100, seed: 7 };
        let a = enumerate_demands(50, 20, m).unwrap();
        let b = enumerate_demands(50, 20, m).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|d| d.len() == 20 && d.check(50).is_ok()));
    }

    #[test]
    fn scenario_json_round_trip() {
        let text = serde_json::to_string(&fig5()).unwrap();
        assert_eq!(NetworkConfig::from_json(&text).unwrap(), fig5());
        assert!(NetworkConfig::from_json("{\"k_weak\": 1}").is_err());
    }
}
