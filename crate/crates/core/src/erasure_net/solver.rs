//! GF(2) solver for received equations whose coefficient rows are unit,
//! sparse or dense.
//!
//! Unit rows reveal a source packet directly. A row made of one unit term
//! plus one sparse term defines its unit column in terms of a few others;
//! such definitions are substituted away. What is left goes through dense
//! Gaussian elimination over the still-unknown columns only.

use super::codebook::RowKind;
use super::DecodeError;
use crate::bits::Bits;

/// `sum_t terms[t] = payload`, where term `(offset, row)` covers columns
/// `offset + i` for every `i` selected by `row`.
#[derive(Debug, Clone)]
pub struct Equation {
    pub terms: Vec<(usize, RowKind)>,
    pub payload: Bits,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Unknown,
    Known,
    Defined,
}

struct Definition {
    col: usize,
    sparse: Vec<usize>,
    payload: Bits,
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Solves for all `num_cols` source packets of `packet_bits` bits.
///
/// `known` lists columns the receiver already holds. Fails with the rank
/// reached when the equations do not determine every column, and with
/// [`DecodeError::Inconsistent`] when they contradict each other.
pub fn solve(
    num_cols: usize,
    packet_bits: usize,
    known: &[(usize, Bits)],
    equations: impl IntoIterator<Item = Equation>,
) -> Result<Vec<Bits>, DecodeError> {
    let mut state = vec![State::Unknown; num_cols];
    let mut value: Vec<Option<Bits>> = vec![None; num_cols];
    for (c, v) in known {
        state[*c] = State::Known;
        value[*c] = Some(v.clone());
    }

    let mut defs: Vec<Definition> = Vec::new();
    let mut def_of = vec![usize::MAX; num_cols];
    let mut general: Vec<Equation> = Vec::new();
    for eq in equations {
        let live: Vec<usize> = (0..eq.terms.len()).filter(|&t| !eq.terms[t].1.is_zero()).collect();
        match live.len() {
            0 => {
                if eq.payload.count_ones() != 0 {
                    return Err(DecodeError::Inconsistent);
                }
            }
            1 => match &eq.terms[live[0]] {
                (off, RowKind::Unit(i)) => {
                    let c = off + i;
                    match &value[c] {
                        Some(v) if *v != eq.payload => return Err(DecodeError::Inconsistent),
                        Some(_) => {}
                        None => {
                            value[c] = Some(eq.payload);
                            state[c] = State::Known;
                        }
                    }
                }
                _ => general.push(eq),
            },
            2 => {
                let (a, b) = (&eq.terms[live[0]], &eq.terms[live[1]]);
                let pair = match (a, b) {
                    ((uo, RowKind::Unit(u)), (so, RowKind::Sparse(s))) | ((so, RowKind::Sparse(s)), (uo, RowKind::Unit(u))) => {
                        Some((uo + u, s.iter().map(|i| so + i).collect::<Vec<_>>()))
                    }
                    _ => None,
                };
                match pair {
                    Some((c, sparse)) if def_of[c] == usize::MAX && !sparse.contains(&c) => {
                        def_of[c] = defs.len();
                        defs.push(Definition { col: c, sparse, payload: eq.payload });
                    }
                    _ => general.push(eq),
                }
            }
            _ => general.push(eq),
        }
    }

    // Drop definitions of known columns or ones that refer to other definitions.
    let (mut kept, mut demoted) = (Vec::new(), Vec::new());
    for d in defs {
        if state[d.col] == State::Known || d.sparse.iter().any(|&s| def_of[s] != usize::MAX) {
            demoted.push(d);
        } else {
            kept.push(d);
        }
    }
    def_of.iter_mut().for_each(|x| *x = usize::MAX);
    for (i, d) in kept.iter().enumerate() {
        def_of[d.col] = i;
        state[d.col] = State::Defined;
    }
    for d in demoted {
        general.push(Equation {
            terms: vec![(0, RowKind::Unit(d.col)), (0, RowKind::Sparse(d.sparse))],
            payload: d.payload,
        });
    }

    let mut unknown_index = vec![usize::MAX; num_cols];
    let mut unknowns = Vec::new();
    for c in 0..num_cols {
        if state[c] == State::Unknown {
            unknown_index[c] = unknowns.len();
            unknowns.push(c);
        }
    }
    let nu = unknowns.len();

    // Definitions reduced to (payload over known columns, unknown columns).
    let reduced: Vec<(Bits, Vec<usize>)> = kept
        .iter()
        .map(|d| {
            let mut p = d.payload.clone();
            let mut u = Vec::new();
            for &s in &d.sparse {
                match state[s] {
                    State::Known => p.xor_assign(value[s].as_ref().expect("known value")),
                    _ => u.push(unknown_index[s]),
                }
            }
            (p, u)
        })
        .collect();

    let cw = words(nu);
    let pw = words(packet_bits);
    // known values and reduced definitions, flat for fast substitution
    let mut flat = vec![0u64; num_cols * pw];
    for c in 0..num_cols {
        match state[c] {
            State::Known => flat[c * pw..(c + 1) * pw].copy_from_slice(value[c].as_ref().expect("known value").words()),
            State::Defined => flat[c * pw..(c + 1) * pw].copy_from_slice(reduced[def_of[c]].0.words()),
            State::Unknown => {}
        }
    }
    let stride = cw + pw;
    let rows = general.len();
    let mut m = vec![0u64; rows * stride];
    for (r, eq) in general.iter().enumerate() {
        let row = &mut m[r * stride..(r + 1) * stride];
        row[cw..].copy_from_slice(eq.payload.words());
        for (off, kind) in &eq.terms {
            kind.for_each_col(|i| {
                let c = off + i;
                let (coeffs, payload) = row.split_at_mut(cw);
                for (a, b) in payload.iter_mut().zip(&flat[c * pw..(c + 1) * pw]) {
                    *a ^= b;
                }
                match state[c] {
                    State::Unknown => {
                        let u = unknown_index[c];
                        coeffs[u / 64] ^= 1 << (u % 64);
                    }
                    State::Known => {}
                    State::Defined => {
                        for &u in &reduced[def_of[c]].1 {
                            coeffs[u / 64] ^= 1 << (u % 64);
                        }
                    }
                }
            });
        }
    }
    drop(general);

    drop(flat);
    let rank = eliminate(&mut m, rows, nu, stride);
    if rank < nu {
        return Err(DecodeError::RankDeficient { rank: num_cols - nu + rank, needed: num_cols });
    }
    // Rows past the rank have zero coefficients; their payloads must vanish too.
    if (nu..rows).any(|r| m[r * stride + cw..(r + 1) * stride].iter().any(|&w| w != 0)) {
        return Err(DecodeError::Inconsistent);
    }

    let mut x = vec![0u64; nu * pw];
    for i in (0..nu).rev() {
        let row = &m[i * stride..(i + 1) * stride];
        let mut acc: Vec<u64> = row[cw..].to_vec();
        for (wi, &w) in row[..cw].iter().enumerate() {
            let mut w = w;
            if wi == i / 64 {
                w &= !((2u64 << (i % 64)).wrapping_sub(1));
            } else if wi < i / 64 {
                continue;
            }
            while w != 0 {
                let j = wi * 64 + w.trailing_zeros() as usize;
                w &= w - 1;
                for (a, b) in acc.iter_mut().zip(&x[j * pw..(j + 1) * pw]) {
                    *a ^= b;
                }
            }
        }
        x[i * pw..(i + 1) * pw].copy_from_slice(&acc);
    }
    for (u, &c) in unknowns.iter().enumerate() {
        value[c] = Some(Bits::from_words(x[u * pw..(u + 1) * pw].to_vec(), packet_bits));
    }
    for (d, (p, us)) in kept.iter().zip(&reduced) {
        let mut v = p.clone();
        for &u in us {
            v.xor_assign(value[unknowns[u]].as_ref().expect("solved"));
        }
        value[d.col] = Some(v);
    }
    Ok(value.into_iter().map(|v| v.expect("every column determined")).collect())
}

/// Forward elimination to row echelon form with pivots on the diagonal
/// as far as possible; returns the rank over the first `cols` columns.
/// When the rank is full, row `i` has its pivot in column `i`.
fn eliminate(m: &mut [u64], rows: usize, cols: usize, stride: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows).find(|&r| m[r * stride + w] & bit != 0) else {
            continue;
        };
        if p != rank {
            let (a, b) = m.split_at_mut(p * stride);
            a[rank * stride..(rank + 1) * stride].swap_with_slice(&mut b[..stride]);
        }
        let (head, tail) = m.split_at_mut((rank + 1) * stride);
        let pivot = &head[rank * stride + w..(rank + 1) * stride];
        for row in tail.chunks_exact_mut(stride) {
            if row[w] & bit != 0 {
                for (a, b) in row[w..].iter_mut().zip(pivot) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
    }
    rank
}
