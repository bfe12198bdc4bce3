//! Prefix-preserving encodings over a 256-way tree.
//!
//! Slot sub-codes run 1..=255 and are never 0, pointer sub-codes run
//! 0..=255. A code is the concatenation of the pointer sub-codes on the path
//! from the root followed by the value's own slot sub-code, big-endian.

/// Smallest `beta` with `256^beta >= x`.
pub(crate) fn ceil_log256(x: u64) -> u8 {
    let mut beta = 0u8;
    let mut cap = 1u128;
    while cap < x as u128 {
        cap <<= 8;
        beta += 1;
    }
    beta
}

/// Order-preserving prefix-preserving codes for values given in ascending
/// order with their weights. Returns `(codes, byte lengths)`.
pub fn ppe_numerical(weights: &[u64]) -> (Vec<u64>, Vec<u8>) {
    let n = weights.len();
    let mut codes = vec![0u64; n];
    let mut lens = vec![0u8; n];
    numerical_node(&mut codes, &mut lens, weights, 0, 0, n);
    (codes, lens)
}

fn numerical_node(codes: &mut [u64], lens: &mut [u8], weights: &[u64], level: u8, start: usize, end: usize) {
    if end - start < 256 || level >= 2 {
        // Leaf: suffixes 1..=(end - start) packed into `beta` bytes.
        let beta = ceil_log256((end - start + 1) as u64);
        for i in start..end {
            codes[i] = shl_bytes(codes[i], beta) + 1 + (i - start) as u64;
            lens[i] = level + beta;
        }
        return;
    }

    let slots = top_255(weights, start, end);
    for (t, &i) in slots.iter().enumerate() {
        lens[i] = level + 1;
        codes[i] = (codes[i] << 8) + t as u64 + 1;
    }
    for t in 0..254 {
        let (lo, hi) = (slots[t] + 1, slots[t + 1]);
        for code in &mut codes[lo..hi] {
            *code = (*code << 8) + t as u64 + 1;
        }
        numerical_node(codes, lens, weights, level + 1, lo, hi);
    }
    // Leftmost subtree hangs off pointer 0.
    for code in &mut codes[start..slots[0]] {
        *code <<= 8;
    }
    numerical_node(codes, lens, weights, level + 1, start, slots[0]);
    // Rightmost subtree hangs off pointer 255.
    let lo = slots[254] + 1;
    for code in &mut codes[lo..end] {
        *code = (*code << 8) + 255;
    }
    numerical_node(codes, lens, weights, level + 1, lo, end);
}

#[inline]
fn shl_bytes(code: u64, bytes: u8) -> u64 {
    assert!(bytes < 8, "code exceeds 8 bytes");
    code << (8 * bytes as u32)
}

/// Indices (ascending) of the 255 heaviest values in `start..end`.
///
/// Weight ties are broken by the bit-reversed offset within the range, which
/// spreads tied picks evenly across the range instead of piling them at its
/// left end.
fn top_255(weights: &[u64], start: usize, end: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (start..end).collect();
    let key = |&i: &usize| (std::cmp::Reverse(weights[i]), ((i - start) as u32).reverse_bits());
    idx.select_nth_unstable_by_key(254, key);
    idx.truncate(255);
    idx.sort_unstable();
    idx
}

/// Balanced prefix-preserving codes for values given in descending weight
/// order. Returns `(codes, byte lengths)`.
pub fn ppe_categorical(n: usize) -> (Vec<u64>, Vec<u8>) {
    let levels = ceil_log256(n as u64 + 1);
    let mut codes = Vec::with_capacity(n);
    let mut lens = Vec::with_capacity(n);
    for level in 1..levels {
        let parents = 1u64 << (8 * (level as u32 - 1));
        for parent in 0..parents {
            for slot in 1..=255u64 {
                codes.push((parent << 8) + slot);
                lens.push(level);
            }
        }
    }
    if codes.len() == n {
        return (codes, lens);
    }
    // Last level: deal the remaining values round-robin across subtrees.
    let parents = 1u64 << (8 * (levels as u32 - 1));
    'fill: for slot in 1..=255u64 {
        for parent in 0..parents {
            codes.push((parent << 8) + slot);
            lens.push(levels);
            if codes.len() == n {
                break 'fill;
            }
        }
    }
    (codes, lens)
}
