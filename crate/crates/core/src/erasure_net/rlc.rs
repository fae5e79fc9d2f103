use super::channel::{ChannelOutput, Packet};
use super::codebook::{CodeLayout, LinearCodebook};
use super::framing::{depacketize, num_packets, packetize, Framing};
use super::solver::{solve, Equation};
use super::{DecodeError, EncodeError};
use crate::bits::Bits;
use serde::Serialize;

/// Parameters of a point-to-point random linear erasure code, shared by
/// encoder and decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RlcParams {
    pub message_bits: usize,
    pub n: usize,
    pub packet_bits: usize,
    pub seed: u64,
    /// The first `k_src` slots carry the source packets unchanged.
    pub systematic: bool,
    pub framing: Framing,
}

impl RlcParams {
    pub fn new(message_bits: usize, n: usize, packet_bits: usize, seed: u64) -> Self {
        Self { message_bits, n, packet_bits, seed, systematic: false, framing: Framing::Checked }
    }

    pub fn k_src(&self) -> usize {
        num_packets(self.message_bits, self.packet_bits, self.framing)
    }

    pub fn codebook(&self) -> Result<LinearCodebook, EncodeError> {
        let k = self.k_src();
        if k > self.n {
            return Err(EncodeError::RateOverload { needed: k, available: self.n });
        }
        let layout = if self.systematic { CodeLayout::systematic(k) } else { CodeLayout::dense() };
        Ok(LinearCodebook::new(k, self.n, self.seed, layout))
    }
}

pub fn rlc_encode(source: &Bits, params: &RlcParams) -> Result<Vec<Packet>, EncodeError> {
    if source.len() != params.message_bits {
        return Err(EncodeError::LengthMismatch { expected: params.message_bits, got: source.len() });
    }
    let code = params.codebook()?;
    Ok(code.encode(&packetize(source, params.packet_bits, params.framing), params.packet_bits))
}

/// Solves for the source packets of `code` from the received slots,
/// given some source packets already known.
pub fn decode_packets(
    code: &LinearCodebook,
    packet_bits: usize,
    output: &ChannelOutput,
    known: &[(usize, Packet)],
) -> Result<Vec<Packet>, DecodeError> {
    if output.len() != code.n {
        return Err(DecodeError::LengthMismatch { expected: code.n, got: output.len() });
    }
    let eqs = (0..code.n).filter_map(|j| {
        output.get(j).map(|y| Equation { terms: vec![(0, code.row(j))], payload: y.clone() })
    });
    solve(code.k_src, packet_bits, known, eqs)
}

pub fn rlc_decode(output: &ChannelOutput, params: &RlcParams) -> Result<Bits, DecodeError> {
    let code = params.codebook()?;
    let packets = decode_packets(&code, params.packet_bits, output, &[])?;
    depacketize(&packets, params.message_bits, params.framing)
}
