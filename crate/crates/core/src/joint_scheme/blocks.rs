//! Codewords laid out back to back in one channel block.

use crate::bits::Bits;
use crate::erasure_net::{
    piggyback_decode_full, piggyback_decode_with_side_info, piggyback_encode, rlc_decode, rlc_encode, transmit,
    ChannelOutput, Framing, Packet, PiggybackParams, RlcParams,
};
use crate::seed::derive_seed;
use sha2::{Digest, Sha256};

pub(crate) enum Payload {
    Rlc(Bits),
    Piggyback { w1: Bits, w2: Bits },
}

impl Payload {
    pub fn bits(&self) -> (usize, usize) {
        match self {
            Payload::Rlc(m) => (m.len(), 0),
            Payload::Piggyback { w1, w2 } => (w1.len(), w2.len()),
        }
    }
}

pub(crate) struct Block {
    pub phase: usize,
    pub payload: Payload,
}

enum Code {
    Rlc(RlcParams),
    Piggyback(PiggybackParams),
    /// Too many source packets for the slots given; nothing decodable was sent.
    Overloaded,
}

pub(crate) struct Sent {
    pub starts: Vec<usize>,
    pub slots: Vec<usize>,
    codes: Vec<Code>,
    outputs: Vec<ChannelOutput>,
    hasher: Sha256,
}

/// Source packets of a message of `bits` bits in the scheme's framing.
pub(crate) fn packets_for(bits: usize, packet_bits: usize) -> usize {
    bits.div_ceil(packet_bits)
}

/// Encodes every block into its slot range and sends the whole block.
pub(crate) fn send(blocks: &[Block], slots: &[usize], packet_bits: usize, seed: u64, deltas: &[f64]) -> Sent {
    let n: usize = slots.iter().sum();
    let mut packets: Vec<Packet> = Vec::with_capacity(n);
    let mut starts = Vec::with_capacity(blocks.len());
    let mut codes = Vec::with_capacity(blocks.len());
    for (i, (b, &s)) in blocks.iter().zip(slots).enumerate() {
        starts.push(packets.len());
        let code_seed = derive_seed(seed, &[1, i as u64]);
        let (code, encoded) = match &b.payload {
            Payload::Rlc(m) => {
                let p = RlcParams { systematic: true, framing: Framing::Raw, ..RlcParams::new(m.len(), s, packet_bits, code_seed) };
                (Code::Rlc(p), rlc_encode(m, &p).ok())
            }
            Payload::Piggyback { w1, w2 } => {
                let p = PiggybackParams { framing: Framing::Raw, ..PiggybackParams::new(w1.len(), w2.len(), s, packet_bits, code_seed) };
                (Code::Piggyback(p), piggyback_encode(w1, w2, &p).ok())
            }
        };
        match encoded {
            Some(x) => {
                packets.extend(x);
                codes.push(code);
            }
            None => {
                packets.extend((0..s).map(|_| Bits::zeros(packet_bits)));
                codes.push(Code::Overloaded);
            }
        }
    }
    let mut hasher = Sha256::new();
    hasher.update((n as u64).to_le_bytes());
    for p in &packets {
        hasher.update(p.to_bytes());
    }
    let outputs = transmit(packets, deltas, derive_seed(seed, &[2]));
    for o in &outputs {
        hasher.update(Bits::from_bools(o.received()).to_bytes());
    }
    Sent { starts, slots: slots.to_vec(), codes, outputs, hasher }
}

impl Sent {
    fn output(&self, receiver: usize, block: usize) -> ChannelOutput {
        self.outputs[receiver].slice(self.starts[block], self.slots[block])
    }

    pub fn decode_rlc(&self, receiver: usize, block: usize) -> Option<Bits> {
        match &self.codes[block] {
            Code::Rlc(p) => rlc_decode(&self.output(receiver, block), p).ok(),
            _ => None,
        }
    }

    pub fn decode_side_info(&self, receiver: usize, block: usize, w2: &Bits) -> Option<Bits> {
        match &self.codes[block] {
            Code::Piggyback(p) => piggyback_decode_with_side_info(&self.output(receiver, block), w2, p).ok(),
            _ => None,
        }
    }

    pub fn decode_full(&self, receiver: usize, block: usize) -> Option<(Bits, Bits)> {
        match &self.codes[block] {
            Code::Piggyback(p) => piggyback_decode_full(&self.output(receiver, block), p).ok(),
            _ => None,
        }
    }

    /// SHA-256 over the transmitted packets, the erasure patterns and `success`.
    pub fn digest(self, success: &[bool]) -> String {
        let mut h = self.hasher;
        h.update(Bits::from_bools(success).to_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
