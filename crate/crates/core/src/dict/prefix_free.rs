//! Order-preserving prefix-free codes by recursive weighted bisection.
//!
//! The sorted value range is split where the heavier side is lightest; the
//! left part gets bit 0, the right part bit 1, and single values become
//! leaves. Code lengths are capped at [`MAX_PREFIX_FREE_BITS`]: a split is
//! only allowed if both sides can still be coded within the remaining bits.

pub const MAX_PREFIX_FREE_BITS: u32 = 64;

/// Returns `(codes, bit lengths)` for values in ascending order.
pub fn prefix_free_encode(weights: &[u64]) -> (Vec<u64>, Vec<u8>) {
    prefix_free_encode_capped(weights, MAX_PREFIX_FREE_BITS)
}

pub fn prefix_free_encode_capped(weights: &[u64], max_bits: u32) -> (Vec<u64>, Vec<u8>) {
    let n = weights.len();
    assert!(max_bits <= MAX_PREFIX_FREE_BITS);
    assert!(n <= 1 || ceil_log2(n) <= max_bits, "{n} values cannot be coded in {max_bits} bits");
    let mut codes = vec![0u64; n];
    let mut lens = vec![0u8; n];
    if n == 1 {
        lens[0] = 1;
        return (codes, lens);
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0u128);
    for &w in weights {
        prefix.push(prefix.last().unwrap() + w as u128);
    }
    let mut stack = vec![(0usize, n, 0u32, 0u64)];
    while let Some((start, end, depth, code)) = stack.pop() {
        if end - start == 1 {
            codes[start] = code;
            lens[start] = depth as u8;
            continue;
        }
        let split = best_split(&prefix, start, end, max_bits - depth - 1);
        stack.push((start, split, depth + 1, code << 1));
        stack.push((split, end, depth + 1, (code << 1) | 1));
    }
    (codes, lens)
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - (n - 1).leading_zeros()
}

/// Split point `k` in `(start, end)` minimising the heavier side, restricted
/// so that both sides hold at most `2^budget` values.
fn best_split(prefix: &[u128], start: usize, end: usize, budget: u32) -> usize {
    let cap = if budget >= 63 { usize::MAX } else { 1usize << budget };
    let lo = (start + 1).max(end.saturating_sub(cap));
    let hi = (end - 1).min(start.saturating_add(cap));
    debug_assert!(lo <= hi);

    let total = prefix[end] - prefix[start];
    let heavier = |k: usize| {
        let left = prefix[k] - prefix[start];
        left.max(total - left)
    };
    // First k whose left weight reaches half of the range.
    let half = prefix[start] + total.div_ceil(2);
    let k = start + prefix[start..=end].partition_point(|&p| p < half);
    let mut best = None::<(u128, usize, usize)>;
    for cand in [k.saturating_sub(1), k, k + 1] {
        let cand = cand.clamp(lo, hi);
        let key = (heavier(cand), (cand - start).abs_diff(end - cand), cand);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    best.unwrap().2
}
