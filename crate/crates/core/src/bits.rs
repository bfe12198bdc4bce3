//! Portable bit-manipulation kernels.
//!
//! The reference loops are the semantic contract. On x86-64 builds with
//! `bmi2` enabled at compile time the deposit/extract kernels lower to the
//! hardware instructions instead.

/// Deposits the low bits of `src` at the positions of the set bits of `mask`.
#[inline]
pub fn pdep(src: u32, mask: u32) -> u32 {
    pdep64(src as u64, mask as u64) as u32
}

/// Gathers the bits of `src` at the set positions of `mask` into the low bits.
#[inline]
pub fn pext(src: u32, mask: u32) -> u32 {
    pext64(src as u64, mask as u64) as u32
}

#[inline]
pub fn pdep64(src: u64, mask: u64) -> u64 {
    #[cfg(all(target_arch = "x86_64", target_feature = "bmi2"))]
    {
        // SAFETY: guarded by the compile-time target feature.
        unsafe { core::arch::x86_64::_pdep_u64(src, mask) }
    }
    #[cfg(not(all(target_arch = "x86_64", target_feature = "bmi2")))]
    {
        pdep64_ref(src, mask)
    }
}

#[inline]
pub fn pext64(src: u64, mask: u64) -> u64 {
    #[cfg(all(target_arch = "x86_64", target_feature = "bmi2"))]
    {
        // SAFETY: guarded by the compile-time target feature.
        unsafe { core::arch::x86_64::_pext_u64(src, mask) }
    }
    #[cfg(not(all(target_arch = "x86_64", target_feature = "bmi2")))]
    {
        pext64_ref(src, mask)
    }
}

/// Reference deposit: walks the set bits of `mask` from the LSB up.
#[inline]
pub fn pdep64_ref(mut src: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    while mask != 0 {
        let lowest = mask & mask.wrapping_neg();
        if src & 1 != 0 {
            out |= lowest;
        }
        src >>= 1;
        mask ^= lowest;
    }
    out
}

/// Reference extract: walks the set bits of `mask` from the LSB up.
#[inline]
pub fn pext64_ref(src: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut k = 0;
    while mask != 0 {
        let lowest = mask & mask.wrapping_neg();
        if src & lowest != 0 {
            out |= 1 << k;
        }
        k += 1;
        mask ^= lowest;
    }
    out
}

/// `E(x) = x & (x - 1)`: clears the lowest set bit.
#[inline]
pub fn erase_rightmost(x: u64) -> u64 {
    x & x.wrapping_sub(1)
}

/// `P(x) = x ^ -x`: every bit strictly above the lowest set bit becomes 1,
/// the lowest set bit and everything below it become 0.
#[inline]
pub fn propagate_rightmost(x: u64) -> u64 {
    x ^ x.wrapping_neg()
}

/// Index of the lowest set bit of a non-zero word, computed as
/// `63 - popcount(P(x))`.
#[inline]
pub fn lowest_set_index(x: u64) -> u32 {
    debug_assert!(x != 0);
    63 - propagate_rightmost(x).count_ones()
}

/// Mask with the low `n` bits set (`n <= 64`).
#[inline]
pub fn low_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Reads the `lanes` bits of block `block` from an LSB-first word array.
/// `lanes` must be a power of two between 8 and 64.
#[inline]
pub fn block_bits(words: &[u32], block: usize, lanes: usize) -> u64 {
    match lanes {
        32 => words.get(block).copied().unwrap_or(0) as u64,
        64 => {
            let lo = words.get(2 * block).copied().unwrap_or(0) as u64;
            let hi = words.get(2 * block + 1).copied().unwrap_or(0) as u64;
            lo | (hi << 32)
        }
        _ => {
            let bit = block * lanes;
            let w = words.get(bit / 32).copied().unwrap_or(0) as u64;
            (w >> (bit % 32)) & low_mask(lanes as u32)
        }
    }
}

/// ORs `bits` into block `block` of an LSB-first word array.
#[inline]
pub fn or_block_bits(words: &mut [u32], block: usize, lanes: usize, bits: u64) {
    match lanes {
        32 => words[block] |= bits as u32,
        64 => {
            words[2 * block] |= bits as u32;
            if let Some(w) = words.get_mut(2 * block + 1) {
                *w |= (bits >> 32) as u32;
            }
        }
        _ => {
            let bit = block * lanes;
            words[bit / 32] |= (bits as u32) << (bit % 32);
        }
    }
}

/// Lane-parallel byte comparison against a broadcast literal.
///
/// Returns `(gt, eq)` where bit `i` of `gt` is set iff `bytes[i] > lit`
/// (unsigned) and bit `i` of `eq` iff `bytes[i] == lit`. `bytes.len()` must be
/// one of 8, 16, 32 or 64.
#[inline]
pub fn cmp_bytes(bytes: &[u8], lit: u8) -> (u64, u64) {
    #[cfg(target_arch = "x86_64")]
    {
        sse2::cmp_bytes(bytes, lit)
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        cmp_bytes_ref(bytes, lit)
    }
}

#[inline]
pub fn cmp_bytes_ref(bytes: &[u8], lit: u8) -> (u64, u64) {
    let mut gt = 0u64;
    let mut eq = 0u64;
    for (i, &b) in bytes.iter().enumerate() {
        gt |= ((b > lit) as u64) << i;
        eq |= ((b == lit) as u64) << i;
    }
    (gt, eq)
}

#[cfg(target_arch = "x86_64")]
mod sse2 {
    use core::arch::x86_64::*;

    /// Signed compare after flipping the sign bit gives the unsigned order.
    #[inline(always)]
    unsafe fn cmp16(ptr: *const u8, lit_eq: __m128i, lit_gt: __m128i, bias: __m128i) -> (u64, u64) {
        let v = _mm_loadu_si128(ptr as *const __m128i);
        let e = _mm_movemask_epi8(_mm_cmpeq_epi8(v, lit_eq)) as u32 as u64;
        let g = _mm_movemask_epi8(_mm_cmpgt_epi8(_mm_xor_si128(v, bias), lit_gt)) as u32 as u64;
        (g, e)
    }

    #[cfg(target_feature = "avx2")]
    #[inline(always)]
    unsafe fn cmp32(ptr: *const u8, lit: u8) -> (u64, u64) {
        let bias = _mm256_set1_epi8(i8::MIN);
        let lit_eq = _mm256_set1_epi8(lit as i8);
        let lit_gt = _mm256_xor_si256(lit_eq, bias);
        let v = _mm256_loadu_si256(ptr as *const __m256i);
        let e = _mm256_movemask_epi8(_mm256_cmpeq_epi8(v, lit_eq)) as u32 as u64;
        let g = _mm256_movemask_epi8(_mm256_cmpgt_epi8(_mm256_xor_si256(v, bias), lit_gt)) as u32 as u64;
        (g, e)
    }

    #[inline(always)]
    pub fn cmp_bytes(bytes: &[u8], lit: u8) -> (u64, u64) {
        let len = bytes.len();
        assert!(matches!(len, 8 | 16 | 32 | 64), "lane count {len}");
        let p = bytes.as_ptr();
        // SAFETY: sse2 is part of the x86-64 baseline and avx2 is only used
        // when compiled in; every load stays within `bytes`, whose length was
        // checked above.
        unsafe {
            #[cfg(target_feature = "avx2")]
            {
                if len == 32 {
                    return cmp32(p, lit);
                }
                if len == 64 {
                    let (g0, e0) = cmp32(p, lit);
                    let (g1, e1) = cmp32(p.add(32), lit);
                    return (g0 | g1 << 32, e0 | e1 << 32);
                }
            }
            let bias = _mm_set1_epi8(i8::MIN);
            let lit_eq = _mm_set1_epi8(lit as i8);
            let lit_gt = _mm_xor_si128(lit_eq, bias);
            match len {
                8 => {
                    let v = _mm_loadl_epi64(p as *const __m128i);
                    let e = _mm_movemask_epi8(_mm_cmpeq_epi8(v, lit_eq)) as u64 & 0xFF;
                    let g = _mm_movemask_epi8(_mm_cmpgt_epi8(_mm_xor_si128(v, bias), lit_gt)) as u64 & 0xFF;
                    (g, e)
                }
                16 => cmp16(p, lit_eq, lit_gt, bias),
                32 => {
                    let (g0, e0) = cmp16(p, lit_eq, lit_gt, bias);
                    let (g1, e1) = cmp16(p.add(16), lit_eq, lit_gt, bias);
                    (g0 | g1 << 16, e0 | e1 << 16)
                }
                _ => {
                    let (mut g, mut e) = (0, 0);
                    for k in 0..4 {
                        let (gk, ek) = cmp16(p.add(16 * k), lit_eq, lit_gt, bias);
                        g |= gk << (16 * k);
                        e |= ek << (16 * k);
                    }
                    (g, e)
                }
            }
        }
    }
}
