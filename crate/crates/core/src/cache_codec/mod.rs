//! Coded caching with subset-indexed splitting: placement, XOR delivery,
//! decoding and rate/memory accounting.
//!
//! Receivers are `0..k_tilde`. The size-`t` subsets of the receivers are
//! ranked in colexicographic order: `{s_0 < s_1 < ...}` has rank
//! `sum_i C(s_i, i + 1)`. That order is part of every on-wire format.

mod dump;

pub use dump::{read_cache_dump, write_cache_dump, DUMP_MAGIC, DUMP_VERSION};

use crate::bits::Bits;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Receivers are tracked in 64-bit masks.
pub const MAX_RECEIVERS: usize = 63;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("t~ = {t_tilde} outside 0..={k_tilde}")]
    TTildeOutOfRange { k_tilde: usize, t_tilde: usize },
    #[error("{0} receivers exceed the limit of {MAX_RECEIVERS}")]
    TooManyReceivers(usize),
    #[error("file of {bits} bits cannot be split into {parts} nonempty parts")]
    FileTooShort { bits: usize, parts: u64 },
    #[error("files have different lengths ({0} vs {1} bits)")]
    FileLengthMismatch(usize, usize),
    #[error("demand vector has {got} entries, expected {expected}")]
    DemandLength { expected: usize, got: usize },
    #[error("demand {demand} out of range for {files} files")]
    DemandOutOfRange { demand: usize, files: usize },
    #[error("receiver {receiver} out of range for {k_tilde} receivers")]
    ReceiverOutOfRange { receiver: usize, k_tilde: usize },
    #[error("missing XOR message for subset {0:?}")]
    MissingXor(Vec<usize>),
    #[error("cache lacks entry (file {0}, subset rank {1})")]
    MissingCacheEntry(usize, u64),
    #[error("payload of {got} bits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cache belongs to a different codec (K~, t~, D or lengths differ)")]
    IncompatibleCache,
    #[error("malformed encoding: {0}")]
    Malformed(String),
}

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).unwrap_or(u64::MAX)
}

/// A sorted set of receivers together with its colex rank among subsets of the same size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SubsetIndex {
    pub members: Vec<usize>,
    pub rank: u64,
}

impl SubsetIndex {
    pub fn from_members(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        let rank = colex_rank(&members);
        Self { members, rank }
    }

    pub fn from_mask(mask: u64) -> Self {
        Self::from_members(mask_members(mask))
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.binary_search(&k).is_ok()
    }

    pub fn mask(&self) -> u64 {
        self.members.iter().fold(0, |m, &k| m | 1 << k)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Colex rank of a sorted, duplicate-free set.
pub fn colex_rank(sorted: &[usize]) -> u64 {
    sorted.iter().enumerate().map(|(i, &s)| binomial(s, i + 1)).sum()
}

/// Inverse of [`colex_rank`] for sets of size `size`.
pub fn colex_unrank(mut rank: u64, size: usize) -> Vec<usize> {
    let mut out = vec![0; size];
    for i in (0..size).rev() {
        let mut s = i;
        while binomial(s + 1, i + 1) <= rank {
            s += 1;
        }
        rank -= binomial(s, i + 1);
        out[i] = s;
    }
    out
}

fn mask_members(mut mask: u64) -> Vec<usize> {
    let mut v = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        v.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    v
}

/// Size-`size` subsets of `0..n` as bit masks in colex order.
pub fn subset_masks(n: usize, size: usize) -> SubsetMasks {
    assert!(n <= MAX_RECEIVERS);
    let next = if size > n { None } else { Some(if size == 0 { 0 } else { (1u64 << size) - 1 }) };
    SubsetMasks { next, limit: 1u64 << n }
}

pub struct SubsetMasks {
    next: Option<u64>,
    limit: u64,
}

impl Iterator for SubsetMasks {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            // Gosper's hack: next larger integer with the same popcount
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < self.limit).then_some(n)
        };
        Some(cur)
    }
}

/// Size-`size` subsets of `0..n` in colex order.
pub fn subsets(n: usize, size: usize) -> impl Iterator<Item = SubsetIndex> {
    subset_masks(n, size).enumerate().map(|(rank, m)| SubsetIndex { members: mask_members(m), rank: rank as u64 })
}

fn check_params(k_tilde: usize, t_tilde: usize) -> Result<(), CodecError> {
    if k_tilde > MAX_RECEIVERS {
        return Err(CodecError::TooManyReceivers(k_tilde));
    }
    if t_tilde > k_tilde {
        return Err(CodecError::TTildeOutOfRange { k_tilde, t_tilde });
    }
    Ok(())
}

/// Every file split into `C(k_tilde, t_tilde)` equal submessages.
///
/// Files are zero-padded to a multiple of the part count; the original
/// length is kept so decoding can strip the padding.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmessageTable {
    pub k_tilde: usize,
    pub t_tilde: usize,
    pub file_bits: usize,
    pub sub_len: usize,
    /// `parts[d][l]` is file `d`'s submessage for the subset of rank `l`.
    pub parts: Vec<Vec<Bits>>,
}

impl SubmessageTable {
    pub fn split(k_tilde: usize, t_tilde: usize, files: &[Bits]) -> Result<Self, CodecError> {
        check_params(k_tilde, t_tilde)?;
        let file_bits = files.first().map_or(0, Bits::len);
        if let Some(f) = files.iter().find(|f| f.len() != file_bits) {
            return Err(CodecError::FileLengthMismatch(file_bits, f.len()));
        }
        let count = binomial(k_tilde, t_tilde);
        if file_bits > 0 && (file_bits as u64) < count {
            return Err(CodecError::FileTooShort { bits: file_bits, parts: count });
        }
        let sub_len = file_bits.div_ceil(count as usize);
        let parts = files
            .iter()
            .map(|f| {
                if sub_len == 0 {
                    vec![Bits::new(); count as usize]
                } else {
                    f.chunks(sub_len).into_iter().chain(std::iter::repeat(Bits::zeros(sub_len))).take(count as usize).collect()
                }
            })
            .collect();
        Ok(Self { k_tilde, t_tilde, file_bits, sub_len, parts })
    }

    pub fn num_files(&self) -> usize {
        self.parts.len()
    }

    pub fn num_parts(&self) -> u64 {
        binomial(self.k_tilde, self.t_tilde)
    }

    /// Concatenation of all parts of file `d`, padding stripped.
    pub fn reassemble(&self, d: usize) -> Bits {
        let mut f = Bits::concat(&self.parts[d]);
        f.resize(self.file_bits);
        f
    }

    fn check_demand(&self, demand: &[usize]) -> Result<(), CodecError> {
        if demand.len() != self.k_tilde {
            return Err(CodecError::DemandLength { expected: self.k_tilde, got: demand.len() });
        }
        if let Some(&d) = demand.iter().find(|&&d| d >= self.num_files()) {
            return Err(CodecError::DemandOutOfRange { demand: d, files: self.num_files() });
        }
        Ok(())
    }
}

/// Cache of one receiver: every submessage whose subset contains it.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheContent {
    pub receiver: usize,
    pub k_tilde: usize,
    pub t_tilde: usize,
    pub num_files: usize,
    pub sub_len: usize,
    pub file_bits: usize,
    /// Keyed by `(file, subset rank)`.
    pub entries: BTreeMap<(usize, u64), Bits>,
}

impl CacheContent {
    pub fn bits(&self) -> usize {
        self.entries.len() * self.sub_len
    }

    pub fn get(&self, file: usize, rank: u64) -> Result<&Bits, CodecError> {
        self.entries.get(&(file, rank)).ok_or(CodecError::MissingCacheEntry(file, rank))
    }
}

/// Places submessages at every receiver in their subset.
pub fn place(table: &SubmessageTable) -> Vec<CacheContent> {
    let mut caches: Vec<CacheContent> = (0..table.k_tilde)
        .map(|k| CacheContent {
            receiver: k,
            k_tilde: table.k_tilde,
            t_tilde: table.t_tilde,
            num_files: table.num_files(),
            sub_len: table.sub_len,
            file_bits: table.file_bits,
            entries: BTreeMap::new(),
        })
        .collect();
    if table.t_tilde == 0 {
        return caches;
    }
    for (rank, mask) in subset_masks(table.k_tilde, table.t_tilde).enumerate() {
        for k in mask_members(mask) {
            for d in 0..table.num_files() {
                caches[k].entries.insert((d, rank as u64), table.parts[d][rank].clone());
            }
        }
    }
    caches
}

/// Splits `files` and places them in one step.
pub fn place_files(k_tilde: usize, t_tilde: usize, files: &[Bits]) -> Result<Vec<CacheContent>, CodecError> {
    Ok(place(&SubmessageTable::split(k_tilde, t_tilde, files)?))
}

/// XOR of the submessages demanded within a subset of size `t_tilde + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorMessage {
    pub subset: SubsetIndex,
    pub payload: Bits,
}

impl XorMessage {
    /// Self-describing encoding: member count, members, payload length, payload bytes.
    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + 2 * self.subset.len() + self.payload.len().div_ceil(8));
        out.extend_from_slice(&(self.subset.len() as u16).to_le_bytes());
        for &m in &self.subset.members {
            out.extend_from_slice(&(m as u16).to_le_bytes());
        }
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.payload.to_bytes());
        out
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Self, CodecError> {
        let bad = || CodecError::Malformed("truncated XOR message".into());
        let take = |at: usize, n: usize| bytes.get(at..at + n).ok_or_else(bad);
        let size = u16::from_le_bytes(take(0, 2)?.try_into().unwrap()) as usize;
        let mut members = Vec::with_capacity(size);
        for i in 0..size {
            members.push(u16::from_le_bytes(take(2 + 2 * i, 2)?.try_into().unwrap()) as usize);
        }
        if members.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CodecError::Malformed("subset members not strictly increasing".into()));
        }
        let at = 2 + 2 * size;
        let len = u64::from_le_bytes(take(at, 8)?.try_into().unwrap()) as usize;
        let body = take(at + 8, len.div_ceil(8))?;
        if bytes.len() != at + 8 + len.div_ceil(8) {
            return Err(CodecError::Malformed("trailing bytes".into()));
        }
        Ok(Self { subset: SubsetIndex::from_members(members), payload: Bits::from_bytes(body, len) })
    }
}

/// XOR over `s` in `mask` of `W_{d_s, mask \ {s}}`.
pub fn xor_for_subset(table: &SubmessageTable, demand: &[usize], mask: u64) -> Result<XorMessage, CodecError> {
    table.check_demand(demand)?;
    if mask.count_ones() as usize != table.t_tilde + 1 || mask >> table.k_tilde != 0 {
        return Err(CodecError::Malformed(format!("subset mask {mask:#x} has the wrong size")));
    }
    let mut payload = Bits::zeros(table.sub_len);
    for s in mask_members(mask) {
        let rest = SubsetIndex::from_mask(mask & !(1 << s));
        payload.xor_assign(&table.parts[demand[s]][rest.rank as usize]);
    }
    Ok(XorMessage { subset: SubsetIndex::from_mask(mask), payload })
}

/// One XOR message per subset of size `t_tilde + 1`, in colex order.
pub fn encode_xor(table: &SubmessageTable, demand: &[usize]) -> Result<Vec<XorMessage>, CodecError> {
    table.check_demand(demand)?;
    subset_masks(table.k_tilde, table.t_tilde + 1).map(|m| xor_for_subset(table, demand, m)).collect()
}

/// Reconstructs the file demanded by `receiver` from its cache and the XOR messages.
pub fn decode(
    receiver: usize,
    demand: &[usize],
    xors: &[XorMessage],
    cache: &CacheContent,
) -> Result<Bits, CodecError> {
    let (k_tilde, t_tilde) = (cache.k_tilde, cache.t_tilde);
    check_params(k_tilde, t_tilde)?;
    if receiver >= k_tilde || cache.receiver != receiver {
        return Err(CodecError::ReceiverOutOfRange { receiver, k_tilde });
    }
    if demand.len() != k_tilde {
        return Err(CodecError::DemandLength { expected: k_tilde, got: demand.len() });
    }
    if let Some(&d) = demand.iter().find(|&&d| d >= cache.num_files) {
        return Err(CodecError::DemandOutOfRange { demand: d, files: cache.num_files });
    }
    let own = demand[receiver];
    let lookup = |mask: u64| -> Result<&XorMessage, CodecError> {
        let rank = SubsetIndex::from_mask(mask).rank as usize;
        match xors.get(rank) {
            Some(x) if x.subset.mask() == mask => Ok(x),
            _ => xors
                .iter()
                .find(|x| x.subset.mask() == mask)
                .ok_or_else(|| CodecError::MissingXor(mask_members(mask))),
        }
    };
    let mut out = Bits::new();
    for (rank, g) in subset_masks(k_tilde, t_tilde).enumerate() {
        if g >> receiver & 1 == 1 {
            out.append(cache.get(own, rank as u64)?);
            continue;
        }
        let s_mask = g | 1 << receiver;
        let x = lookup(s_mask)?;
        if x.payload.len() != cache.sub_len {
            return Err(CodecError::LengthMismatch { expected: cache.sub_len, got: x.payload.len() });
        }
        let mut part = x.payload.clone();
        for s in mask_members(g) {
            let rest = SubsetIndex::from_mask(s_mask & !(1 << s));
            part.xor_assign(cache.get(demand[s], rest.rank)?);
        }
        out.append(&part);
    }
    out.resize(cache.file_bits);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accounting {
    /// Rate the XOR messages need on an error-free pipe.
    pub pipe_rate: f64,
    /// Cache memory per receiver.
    pub memory: f64,
    pub num_xors: u64,
    pub cache_entries: u64,
}

/// Rate and memory of the scheme with parameter `t_tilde` for files of rate `rate`.
pub fn accounting(k_tilde: usize, t_tilde: usize, num_files: usize, rate: f64) -> Result<Accounting, CodecError> {
    check_params(k_tilde, t_tilde)?;
    if k_tilde == 0 {
        return Err(CodecError::TTildeOutOfRange { k_tilde, t_tilde });
    }
    let (k, t) = (k_tilde as f64, t_tilde as f64);
    Ok(Accounting {
        pipe_rate: rate * (k - t) / (t + 1.0),
        memory: num_files as f64 * t * rate / k,
        num_xors: binomial(k_tilde, t_tilde + 1),
        cache_entries: if t_tilde == 0 { 0 } else { num_files as u64 * binomial(k_tilde - 1, t_tilde - 1) },
    })
}
