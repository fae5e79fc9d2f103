use serde::{Deserialize, Serialize};

/// How the `n` slots of a block are divided among the codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotPlanner {
    /// Gives every codeword the same number of standard deviations of
    /// slack over its expected reception count.
    #[default]
    EqualReliability,
    /// `floor(beta_i n)` slots per subphase, split equally among its
    /// codewords; leftovers go to the bottleneck subphase.
    Proportional,
}

/// Decoding requirements of one codeword: each entry is a number of
/// source packets some receiver must collect at its erasure probability.
#[derive(Debug, Clone)]
pub(crate) struct BlockNeed {
    pub phase: usize,
    pub needs: Vec<(usize, f64)>,
}

/// Slots for `k` packets at erasure probability `delta`, so that the
/// expected reception count minus `z` standard deviations is `k + 2`.
fn slots_for(k: usize, delta: f64, z: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let need = k as f64 + 2.0;
    let a = 1.0 - delta;
    let zc = z * (delta * a).sqrt();
    let u = (zc + (zc * zc + 4.0 * a * need).sqrt()) / (2.0 * a);
    u * u
}

fn block_slots(b: &BlockNeed, z: f64) -> usize {
    b.needs.iter().map(|&(k, d)| slots_for(k, d, z)).fold(0.0, f64::max).ceil() as usize
}

/// Splits `n` slots among `blocks`. `betas[p]` is the intended fraction of
/// phase `p`; leftover slots go to the first block of phase `bottleneck`
/// (or the first block when that phase is empty). The result sums to `n`.
pub(crate) fn plan_slots(planner: SlotPlanner, blocks: &[BlockNeed], betas: &[f64], bottleneck: usize, n: usize) -> Vec<usize> {
    if blocks.is_empty() {
        return Vec::new();
    }
    let mut slots = match planner {
        SlotPlanner::Proportional => proportional(blocks, betas, n),
        SlotPlanner::EqualReliability => equal_reliability(blocks, n),
    };
    let used: usize = slots.iter().sum();
    let sink = blocks.iter().position(|b| b.phase == bottleneck).unwrap_or(0);
    slots[sink] += n - used;
    slots
}

fn proportional(blocks: &[BlockNeed], betas: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = betas.iter().sum();
    let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
    let mut slots = vec![0; blocks.len()];
    for (p, &beta) in betas.iter().enumerate() {
        let members: Vec<usize> = (0..blocks.len()).filter(|&i| blocks[i].phase == p).collect();
        if members.is_empty() {
            continue;
        }
        let phase_slots = (beta * scale * n as f64 + 1e-9).floor() as usize;
        let (each, extra) = (phase_slots / members.len(), phase_slots % members.len());
        for (j, &i) in members.iter().enumerate() {
            slots[i] = each + usize::from(j < extra);
        }
    }
    slots
}

fn equal_reliability(blocks: &[BlockNeed], n: usize) -> Vec<usize> {
    let total = |z: f64| blocks.iter().map(|b| block_slots(b, z)).sum::<usize>();
    let (mut lo, mut hi) = (-80.0, 80.0);
    if total(hi) <= n {
        return blocks.iter().map(|b| block_slots(b, hi)).collect();
    }
    if total(lo) > n {
        // noiseless blocks ignore z; shrink everything proportionally
        let want: Vec<usize> = blocks.iter().map(|b| block_slots(b, lo)).collect();
        let sum: usize = want.iter().sum();
        return want.iter().map(|&w| w * n / sum).collect();
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if total(mid) <= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    blocks.iter().map(|b| block_slots(b, lo)).collect()
}
