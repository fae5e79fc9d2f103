//! Binary cache dump, all integers little endian:
//!
//! ```text
//! magic "CBCD" | version u32 | k_tilde u32 | t_tilde u32 | num_files u32
//! | sub_len u64 | file_bits u64 | receiver u32 | entries u64
//! | entries x (file u32, rank u64, ceil(sub_len / 8) payload bytes)
//! ```

use super::{binomial, CacheContent, CodecError};
use crate::bits::Bits;
use std::collections::BTreeMap;

pub const DUMP_MAGIC: &[u8; 4] = b"CBCD";
pub const DUMP_VERSION: u32 = 1;

pub fn write_cache_dump(cache: &CacheContent) -> Vec<u8> {
    let payload = cache.sub_len.div_ceil(8);
    let mut out = Vec::with_capacity(44 + cache.entries.len() * (12 + payload));
    out.extend_from_slice(DUMP_MAGIC);
    for v in [DUMP_VERSION, cache.k_tilde as u32, cache.t_tilde as u32, cache.num_files as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(cache.sub_len as u64).to_le_bytes());
    out.extend_from_slice(&(cache.file_bits as u64).to_le_bytes());
    out.extend_from_slice(&(cache.receiver as u32).to_le_bytes());
    out.extend_from_slice(&(cache.entries.len() as u64).to_le_bytes());
    for (&(d, rank), bits) in &cache.entries {
        out.extend_from_slice(&(d as u32).to_le_bytes());
        out.extend_from_slice(&rank.to_le_bytes());
        out.extend_from_slice(&bits.to_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let s = self
            .bytes
            .get(self.at..self.at + n)
            .ok_or_else(|| CodecError::Malformed(format!("dump truncated at byte {}", self.at)))?;
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_cache_dump(bytes: &[u8]) -> Result<CacheContent, CodecError> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != DUMP_MAGIC {
        return Err(CodecError::Malformed("bad magic".into()));
    }
    let version = r.u32()?;
    if version != DUMP_VERSION {
        return Err(CodecError::Malformed(format!("unsupported version {version}")));
    }
    let k_tilde = r.u32()? as usize;
    let t_tilde = r.u32()? as usize;
    let num_files = r.u32()? as usize;
    let sub_len = r.u64()? as usize;
    let file_bits = r.u64()? as usize;
    let receiver = r.u32()? as usize;
    let count = r.u64()?;
    if t_tilde > k_tilde || receiver >= k_tilde.max(1) {
        return Err(CodecError::Malformed("inconsistent header".into()));
    }
    let subsets = binomial(k_tilde, t_tilde);
    let mut entries = BTreeMap::new();
    for _ in 0..count {
        let d = r.u32()? as usize;
        let rank = r.u64()?;
        if d >= num_files || rank >= subsets {
            return Err(CodecError::Malformed(format!("entry (file {d}, rank {rank}) out of range")));
        }
        let bits = Bits::from_bytes(r.take(sub_len.div_ceil(8))?, sub_len);
        if entries.insert((d, rank), bits).is_some() {
            return Err(CodecError::Malformed(format!("duplicate entry (file {d}, rank {rank})")));
        }
    }
    if r.at != bytes.len() {
        return Err(CodecError::Malformed("trailing bytes".into()));
    }
    Ok(CacheContent { receiver, k_tilde, t_tilde, num_files, sub_len, file_bits, entries })
}

#[cfg(test)]
mod tests {
    use super::super::place_files;
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn dump_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let files: Vec<Bits> = (0..3).map(|_| Bits::random(101, &mut rng)).collect();
        for c in place_files(4, 2, &files).unwrap() {
            let bytes = write_cache_dump(&c);
            assert_eq!(&bytes[..4], DUMP_MAGIC);
            assert_eq!(read_cache_dump(&bytes).unwrap(), c);
            assert!(read_cache_dump(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}
