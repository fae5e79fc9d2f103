//! Packed bit strings.
//!
//! Bits are stored little-endian in `u64` words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Bits at positions `>= len` in the last word
//! are always zero, so derived equality and hashing are exact.

use rand::Rng;
use std::fmt;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; words_for(len)], len }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..words_for(len)).map(|_| rng.gen()).collect();
        mask_tail(&mut words, len);
        Self { words, len }
    }

    /// Builds from raw words; bits beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(words_for(len), 0);
        mask_tail(&mut words, len);
        Self { words, len }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut out = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                out.set(i, true);
            }
        }
        out
    }

    /// Bit `i` is bit `i % 8` of byte `i / 8`.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        let mut words = vec![0u64; words_for(len)];
        for (i, &b) in bytes.iter().enumerate().take(len.div_ceil(8)) {
            words[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        mask_tail(&mut words, len);
        Self { words, len }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        (0..n).map(|i| (self.words[i / 8] >> ((i % 8) * 8)) as u8).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits in increasing order.
    pub fn ones(&self) -> Ones<'_> {
        Ones { words: &self.words, word: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    /// In-place XOR with an equal-length string.
    pub fn xor_assign(&mut self, other: &Bits) {
        assert_eq!(self.len, other.len, "xor of bit strings with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Zero-extends or truncates to `len` bits.
    pub fn resize(&mut self, len: usize) {
        self.words.resize(words_for(len), 0);
        self.len = len;
        mask_tail(&mut self.words, len);
    }

    /// Copies `len` bits starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len, "slice {start}+{len} out of range for {}", self.len);
        let mut words = vec![0u64; words_for(len)];
        let shift = start % 64;
        let base = start / 64;
        for (i, w) in words.iter_mut().enumerate() {
            let lo = self.words.get(base + i).copied().unwrap_or(0);
            *w = if shift == 0 {
                lo
            } else {
                let hi = self.words.get(base + i + 1).copied().unwrap_or(0);
                (lo >> shift) | (hi << (64 - shift))
            };
        }
        mask_tail(&mut words, len);
        Bits { words, len }
    }

    /// Appends `other` after the last bit.
    pub fn append(&mut self, other: &Bits) {
        if other.len == 0 {
            return;
        }
        let shift = self.len % 64;
        let new_len = self.len + other.len;
        if shift == 0 {
            self.words.truncate(self.len / 64);
            self.words.extend_from_slice(&other.words);
        } else {
            self.words.resize(words_for(new_len), 0);
            let base = self.len / 64;
            for (i, &w) in other.words.iter().enumerate() {
                self.words[base + i] |= w << shift;
                if let Some(next) = self.words.get_mut(base + i + 1) {
                    *next |= w >> (64 - shift);
                }
            }
        }
        self.len = new_len;
        mask_tail(&mut self.words, new_len);
    }

    pub fn concat<'a, I: IntoIterator<Item = &'a Bits>>(parts: I) -> Bits {
        let mut out = Bits::new();
        for p in parts {
            out.append(p);
        }
        out
    }

    /// Splits into consecutive chunks of `chunk` bits; the last chunk is zero-padded.
    pub fn chunks(&self, chunk: usize) -> Vec<Bits> {
        assert!(chunk > 0, "chunk size must be positive");
        let count = self.len.div_ceil(chunk);
        (0..count)
            .map(|i| {
                let start = i * chunk;
                let take = chunk.min(self.len - start);
                let mut c = self.slice(start, take);
                c.resize(chunk);
                c
            })
            .collect()
    }
}

fn mask_tail(words: &mut [u64], len: usize) {
    let rem = len % 64;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let tz = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word * 64 + tz);
            }
            self.word += 1;
            if self.word >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word];
        }
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits[{}](", self.len)?;
        for i in 0..self.len.min(128) {
            write!(f, "{}", self.get(i) as u8)?;
        }
        if self.len > 128 {
            write!(f, "...")?;
        }
        write!(f, ")")
    }
}
