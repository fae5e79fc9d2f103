//! Packet-erasure broadcast channel, seeded random linear codes over GF(2)
//! and piggyback coding.

mod channel;
mod codebook;
mod framing;
mod piggyback;
mod rlc;
mod solver;

pub use channel::{transmit, ChannelOutput, Packet};
pub use codebook::{CodeLayout, LinearCodebook, RowKind, SPARSE_DEGREE};
pub use framing::{depacketize, frame, framed_bits, num_packets, packetize, Framing, CHECKSUM_BITS};
pub use piggyback::{piggyback_decode_full, piggyback_decode_with_side_info, piggyback_encode, PiggybackParams};
pub use rlc::{decode_packets, rlc_decode, rlc_encode, RlcParams};
pub use solver::{solve, Equation};

use crate::bits::Bits;
use crate::report::TrialReport;
use crate::seed::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("{needed} source packets do not fit into {available} slots")]
    RateOverload { needed: usize, available: usize },
    #[error("message has {got} bits, parameters say {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("received equations have rank {rank}, {needed} needed")]
    RankDeficient { rank: usize, needed: usize },
    #[error("received equations are inconsistent")]
    Inconsistent,
    #[error("checksum mismatch")]
    ChecksumMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Params(#[from] EncodeError),
}

/// Outcome counts at one rate pair of a piggyback sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub r1: f64,
    pub r2: f64,
    pub trials: usize,
    /// Receiver 1 (erasure probability `delta1`) decoding `w1` with `w2` as side information.
    pub side_info_successes: usize,
    /// Receiver 2 (erasure probability `delta2`) decoding both messages.
    pub full_successes: usize,
}

impl SweepPoint {
    pub fn side_info_rate(&self) -> f64 {
        self.side_info_successes as f64 / self.trials as f64
    }

    pub fn full_rate(&self) -> f64 {
        self.full_successes as f64 / self.trials as f64
    }
}

/// Settings shared by all points of a piggyback sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSettings {
    pub delta1: f64,
    pub delta2: f64,
    pub packet_bits: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

/// One piggyback transmission at rates `(r1, r2)` bits per channel use.
/// Rate pairs that cannot be encoded count as failures for both decoders.
pub fn piggyback_trial(s: &SweepSettings, r1: f64, r2: f64, trial: u64) -> TrialReport {
    let seed = derive_seed(s.seed, &[r1.to_bits(), r2.to_bits(), trial]);
    let (b1, b2) = (crate::model::file_bits(r1, s.n), crate::model::file_bits(r2, s.n));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let (w1, w2) = (Bits::random(b1, &mut rng), Bits::random(b2, &mut rng));
    let p = PiggybackParams::new(b1, b2, s.n, s.packet_bits, derive_seed(seed, &[1]));
    let success = match piggyback_encode(&w1, &w2, &p) {
        Ok(x) => {
            let out = transmit(x, &[s.delta1, s.delta2], derive_seed(seed, &[2]));
            let weak = piggyback_decode_with_side_info(&out[0], &w2, &p).is_ok_and(|v| v == w1);
            let strong = piggyback_decode_full(&out[1], &p).is_ok_and(|(a, b)| a == w1 && b == w2);
            vec![weak, strong]
        }
        Err(_) => vec![false, false],
    };
    TrialReport {
        trial,
        seed,
        scheme: "piggyback".into(),
        rate: r1 + r2,
        n: s.n,
        success,
        slots_used: s.n,
        extra: serde_json::json!({ "r1": r1, "r2": r2 }),
    }
}

/// Runs `s.trials` piggyback transmissions at every rate pair.
pub fn piggyback_sweep(s: &SweepSettings, points: &[(f64, f64)]) -> Vec<SweepPoint> {
    points
        .iter()
        .map(|&(r1, r2)| {
            let reports: Vec<TrialReport> =
                (0..s.trials as u64).into_par_iter().map(|t| piggyback_trial(s, r1, r2, t)).collect();
            SweepPoint {
                r1,
                r2,
                trials: s.trials,
                side_info_successes: reports.iter().filter(|r| r.success[0]).count(),
                full_successes: reports.iter().filter(|r| r.success[1]).count(),
            }
        })
        .collect()
}
