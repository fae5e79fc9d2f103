use super::channel::Packet;
use super::DecodeError;
use crate::bits::Bits;
use serde::{Deserialize, Serialize};

pub const CHECKSUM_BITS: usize = 32;

/// Whether a message travels with a CRC-32 trailer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Framing {
    #[default]
    Checked,
    Raw,
}

/// Bits on the wire for a message of `message_bits` bits; empty messages stay empty.
pub fn framed_bits(message_bits: usize, framing: Framing) -> usize {
    match framing {
        Framing::Checked if message_bits > 0 => message_bits + CHECKSUM_BITS,
        _ => message_bits,
    }
}

pub fn num_packets(message_bits: usize, packet_bits: usize, framing: Framing) -> usize {
    framed_bits(message_bits, framing).div_ceil(packet_bits)
}

fn checksum(message: &Bits) -> Bits {
    let mut h = crc32fast::Hasher::new();
    h.update(&(message.len() as u64).to_le_bytes());
    h.update(&message.to_bytes());
    Bits::from_bytes(&h.finalize().to_le_bytes(), CHECKSUM_BITS)
}

pub fn frame(message: &Bits, framing: Framing) -> Bits {
    let mut out = message.clone();
    if framing == Framing::Checked && !message.is_empty() {
        out.append(&checksum(message));
    }
    out
}

/// Message bits split into zero-padded packets.
pub fn packetize(message: &Bits, packet_bits: usize, framing: Framing) -> Vec<Packet> {
    frame(message, framing).chunks(packet_bits)
}

/// Inverse of [`packetize`]; verifies the trailer when present.
pub fn depacketize(packets: &[Packet], message_bits: usize, framing: Framing) -> Result<Bits, DecodeError> {
    let mut all = Bits::concat(packets);
    let total = framed_bits(message_bits, framing);
    if all.len() < total {
        return Err(DecodeError::LengthMismatch { expected: total, got: all.len() });
    }
    all.resize(total);
    let message = all.slice(0, message_bits);
    if total > message_bits && all.slice(message_bits, CHECKSUM_BITS) != checksum(&message) {
        return Err(DecodeError::ChecksumMismatch);
    }
    Ok(message)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_trip_and_detection() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = Bits::random(77, &mut rng);
        let p = packetize(&m, 8, Framing::Checked);
        assert_eq!(p.len(), num_packets(77, 8, Framing::Checked));
        assert_eq!(p.len(), 14);
        assert_eq!(depacketize(&p, 77, Framing::Checked).unwrap(), m);
        let mut q = p.clone();
        q[3].toggle(0);
        assert_eq!(depacketize(&q, 77, Framing::Checked), Err(DecodeError::ChecksumMismatch));
        let r = packetize(&m, 8, Framing::Raw);
        assert_eq!(r.len(), 10);
        assert_eq!(depacketize(&r, 77, Framing::Raw).unwrap(), m);
        assert!(packetize(&Bits::new(), 8, Framing::Checked).is_empty());
    }
}
