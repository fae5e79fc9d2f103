use crate::bits::Bits;
use crate::seed::derive_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// One channel symbol of `F` bits.
pub type Packet = Bits;

/// What one receiver observed: each slot is the transmitted packet or an erasure.
#[derive(Debug, Clone)]
pub struct ChannelOutput {
    packets: Arc<[Packet]>,
    offset: usize,
    received: Vec<bool>,
}

impl ChannelOutput {
    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }

    /// `None` marks an erasure.
    pub fn get(&self, slot: usize) -> Option<&Packet> {
        self.received[slot].then(|| &self.packets[self.offset + slot])
    }

    /// Reception flags, one per slot.
    pub fn received(&self) -> &[bool] {
        &self.received
    }

    pub fn received_count(&self) -> usize {
        self.received.iter().filter(|&&r| r).count()
    }

    /// Slots `start..start + len` as a standalone output.
    pub fn slice(&self, start: usize, len: usize) -> ChannelOutput {
        ChannelOutput {
            packets: Arc::clone(&self.packets),
            offset: self.offset + start,
            received: self.received[start..start + len].to_vec(),
        }
    }

    /// Builds an output from explicit observations.
    pub fn from_slots(slots: Vec<Option<Packet>>, packet_bits: usize) -> ChannelOutput {
        let received = slots.iter().map(Option::is_some).collect();
        let packets: Arc<[Packet]> = slots.into_iter().map(|s| s.unwrap_or_else(|| Bits::zeros(packet_bits))).collect();
        ChannelOutput { packets, offset: 0, received }
    }

    pub fn to_slots(&self) -> Vec<Option<Packet>> {
        (0..self.len()).map(|j| self.get(j).cloned()).collect()
    }
}

/// Sends `packets` once to every receiver; receiver `k` loses each slot
/// independently with probability `deltas[k]`.
pub fn transmit(packets: Vec<Packet>, deltas: &[f64], seed: u64) -> Vec<ChannelOutput> {
    let packets: Arc<[Packet]> = packets.into();
    deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xc4a2, k as u64]));
            let received = (0..packets.len())
                .map(|_| if delta <= 0.0 { true } else if delta >= 1.0 { false } else { rng.gen::<f64>() >= delta })
                .collect();
            ChannelOutput { packets: Arc::clone(&packets), offset: 0, received }
        })
        .collect()
}
