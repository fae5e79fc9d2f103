//! Piggyback coding: slot `j` carries `G1_j w1 + G2_j w2`. A receiver that
//! knows `w2` strips it and decodes `w1` alone; any other receiver decodes
//! both messages jointly.
//!
//! `G1` is systematic on the first `k1` slots and sparse on the next `k2`,
//! where `G2` is zero and systematic respectively; both are dense after.

use super::channel::{ChannelOutput, Packet};
use super::codebook::{CodeLayout, LinearCodebook, RowKind, SPARSE_DEGREE};
use super::framing::{depacketize, num_packets, packetize, Framing};
use super::solver::{solve, Equation};
use super::{DecodeError, EncodeError};
use crate::bits::Bits;
use crate::seed::derive_seed;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PiggybackParams {
    pub w1_bits: usize,
    pub w2_bits: usize,
    pub n: usize,
    pub packet_bits: usize,
    pub seed: u64,
    pub framing: Framing,
}

impl PiggybackParams {
    pub fn new(w1_bits: usize, w2_bits: usize, n: usize, packet_bits: usize, seed: u64) -> Self {
        Self { w1_bits, w2_bits, n, packet_bits, seed, framing: Framing::Checked }
    }

    pub fn k1(&self) -> usize {
        num_packets(self.w1_bits, self.packet_bits, self.framing)
    }

    pub fn k2(&self) -> usize {
        num_packets(self.w2_bits, self.packet_bits, self.framing)
    }

    /// The generators `(G1, G2)`.
    pub fn codebooks(&self) -> Result<(LinearCodebook, LinearCodebook), EncodeError> {
        let (k1, k2) = (self.k1(), self.k2());
        if k1 + k2 > self.n {
            return Err(EncodeError::RateOverload { needed: k1 + k2, available: self.n });
        }
        let g1 = LinearCodebook::new(
            k1,
            self.n,
            derive_seed(self.seed, &[1]),
            CodeLayout { zero: 0, unit: k1, unit_offset: 0, sparse: k2, sparse_degree: SPARSE_DEGREE },
        );
        let g2 = LinearCodebook::new(
            k2,
            self.n,
            derive_seed(self.seed, &[2]),
            CodeLayout { zero: k1, unit: k2, unit_offset: 0, sparse: 0, sparse_degree: SPARSE_DEGREE },
        );
        Ok((g1, g2))
    }
}

fn apply(row: &RowKind, src: &[Packet], acc: &mut Packet) {
    row.for_each_col(|i| acc.xor_assign(&src[i]));
}

pub fn piggyback_encode(w1: &Bits, w2: &Bits, params: &PiggybackParams) -> Result<Vec<Packet>, EncodeError> {
    for (got, expected) in [(w1.len(), params.w1_bits), (w2.len(), params.w2_bits)] {
        if got != expected {
            return Err(EncodeError::LengthMismatch { expected, got });
        }
    }
    let (g1, g2) = params.codebooks()?;
    let f = params.packet_bits;
    let (s1, s2) = (packetize(w1, f, params.framing), packetize(w2, f, params.framing));
    Ok((0..params.n)
        .map(|j| {
            let mut x = Bits::zeros(f);
            apply(&g1.row(j), &s1, &mut x);
            apply(&g2.row(j), &s2, &mut x);
            x
        })
        .collect())
}

/// Decodes `w1` at a receiver that already holds `w2`.
pub fn piggyback_decode_with_side_info(
    output: &ChannelOutput,
    w2_known: &Bits,
    params: &PiggybackParams,
) -> Result<Bits, DecodeError> {
    if output.len() != params.n {
        return Err(DecodeError::LengthMismatch { expected: params.n, got: output.len() });
    }
    if w2_known.len() != params.w2_bits {
        return Err(DecodeError::LengthMismatch { expected: params.w2_bits, got: w2_known.len() });
    }
    let (g1, g2) = params.codebooks()?;
    let s2 = packetize(w2_known, params.packet_bits, params.framing);
    let eqs = (0..params.n).filter_map(|j| {
        output.get(j).map(|y| {
            let mut payload = y.clone();
            apply(&g2.row(j), &s2, &mut payload);
            Equation { terms: vec![(0, g1.row(j))], payload }
        })
    });
    let packets = solve(g1.k_src, params.packet_bits, &[], eqs)?;
    depacketize(&packets, params.w1_bits, params.framing)
}

/// Decodes both messages.
pub fn piggyback_decode_full(output: &ChannelOutput, params: &PiggybackParams) -> Result<(Bits, Bits), DecodeError> {
    if output.len() != params.n {
        return Err(DecodeError::LengthMismatch { expected: params.n, got: output.len() });
    }
    let (g1, g2) = params.codebooks()?;
    let k1 = g1.k_src;
    let eqs = (0..params.n).filter_map(|j| {
        output.get(j).map(|y| Equation { terms: vec![(0, g1.row(j)), (k1, g2.row(j))], payload: y.clone() })
    });
    let packets = solve(k1 + g2.k_src, params.packet_bits, &[], eqs)?;
    let w1 = depacketize(&packets[..k1], params.w1_bits, params.framing)?;
    let w2 = depacketize(&packets[k1..], params.w2_bits, params.framing)?;
    Ok((w1, w2))
}
