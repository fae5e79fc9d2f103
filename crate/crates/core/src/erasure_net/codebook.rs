use super::channel::Packet;
use crate::bits::Bits;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Default number of source packets combined by a sparse row.
pub const SPARSE_DEGREE: usize = 12;

/// Generator row of one slot over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    Zero,
    /// The slot carries source packet `i` unchanged.
    Unit(usize),
    /// XOR of a few distinct source packets.
    Sparse(Vec<usize>),
    Dense(Bits),
}

impl RowKind {
    /// Calls `f` with every source index in the row.
    pub fn for_each_col(&self, mut f: impl FnMut(usize)) {
        match self {
            RowKind::Zero => {}
            RowKind::Unit(i) => f(*i),
            RowKind::Sparse(v) => v.iter().for_each(|&i| f(i)),
            RowKind::Dense(b) => b.ones().for_each(f),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RowKind::Zero => true,
            RowKind::Sparse(v) => v.is_empty(),
            RowKind::Dense(b) => b.count_ones() == 0,
            RowKind::Unit(_) => false,
        }
    }
}

/// Slot ranges of a generator: `zero` all-zero rows, then `unit` rows
/// carrying packets `unit_offset..unit_offset + unit`, then `sparse`
/// rows of degree `sparse_degree`, then dense rows to the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CodeLayout {
    pub zero: usize,
    pub unit: usize,
    pub unit_offset: usize,
    pub sparse: usize,
    pub sparse_degree: usize,
}

impl CodeLayout {
    pub fn dense() -> Self {
        Self { zero: 0, unit: 0, unit_offset: 0, sparse: 0, sparse_degree: SPARSE_DEGREE }
    }

    pub fn systematic(k_src: usize) -> Self {
        Self { unit: k_src, ..Self::dense() }
    }
}

/// A seeded pseudo-random `n x k_src` generator over GF(2). Rows are
/// regenerated on demand from `(seed, slot)`, so encoder and decoder only
/// share the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinearCodebook {
    pub k_src: usize,
    pub n: usize,
    pub seed: u64,
    pub layout: CodeLayout,
}

impl LinearCodebook {
    pub fn new(k_src: usize, n: usize, seed: u64, layout: CodeLayout) -> Self {
        assert!(
            layout.unit_offset + layout.unit <= k_src || layout.unit == 0,
            "unit rows reference packets beyond k_src"
        );
        Self { k_src, n, seed, layout }
    }

    pub fn row(&self, slot: usize) -> RowKind {
        let l = &self.layout;
        if self.k_src == 0 || slot < l.zero {
            return RowKind::Zero;
        }
        let j = slot - l.zero;
        if j < l.unit {
            return RowKind::Unit(l.unit_offset + j);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(slot as u64);
        if j - l.unit < l.sparse {
            let degree = l.sparse_degree.min(self.k_src);
            let mut idx = sample(&mut rng, self.k_src, degree).into_vec();
            idx.sort_unstable();
            return RowKind::Sparse(idx);
        }
        RowKind::Dense(Bits::random(self.k_src, &mut rng))
    }

    /// Slot `j` carries the XOR of the source packets selected by row `j`.
    pub fn encode(&self, source: &[Packet], packet_bits: usize) -> Vec<Packet> {
        assert_eq!(source.len(), self.k_src, "source packet count");
        (0..self.n)
            .map(|j| {
                let mut x = Bits::zeros(packet_bits);
                self.row(j).for_each_col(|i| x.xor_assign(&source[i]));
                x
            })
            .collect()
    }
}
