//! Variable byte slices over prefix-preserving codes.
//!
//! `BS_1` holds the first byte of every code. For `j >= 2`, `BS_j` packs,
//! in row order, the `j`-th byte of only those codes that have one, and the
//! existence mask `M_j` marks which rows those are. A per-block directory
//! records where each block starts inside every `BS_j`.

use std::cmp::Ordering;

use super::{check_selection, scan, BlockOutcome, BlockScan, Tally, LookupStats, Prepared, ScanOptions, ScanStats, SLICE_PAD};
use crate::bits::{block_bits, cmp_bytes, erase_rightmost, low_mask, lowest_set_index, pdep64, pext64};
use crate::bitvec::ResultBitVector;
use crate::codec::{put_bytes, put_u64, put_u8, put_words, Reader};
use crate::error::{Error, Result};
use crate::predicate::{CodeLiteral, CodePredicate, LaneConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VbsColumn {
    n_rows: usize,
    lanes: LaneConfig,
    k: u8,
    /// `slices[j - 1]` is `BS_j`, followed by `SLICE_PAD` zero bytes.
    slices: Vec<Vec<u8>>,
    slice_lens: Vec<usize>,
    /// `masks[j - 2]` is `M_j`.
    masks: Vec<Vec<u32>>,
    /// Block-major: entry `b * (k - 1) + (j - 2)` is the offset of block `b` in `BS_j`.
    directory: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VbsSizeReport {
    pub slice_bytes: Vec<usize>,
    pub mask_bytes: usize,
    pub directory_bytes: usize,
    pub total_bytes: usize,
    /// `8 * (slices + masks) / n_rows`; the directory is not counted.
    pub avg_bits_per_code: f64,
}

/// Byte `j` (1-based, most significant first) of a `len`-byte code.
#[inline]
fn code_byte(code: u64, len: u8, j: usize) -> u8 {
    (code >> (8 * (len as usize - j))) as u8
}

impl VbsColumn {
    pub fn build(codes: &[u64], lens: &[u8], lanes: LaneConfig) -> Result<Self> {
        if codes.len() != lens.len() {
            return Err(Error::LengthMismatch { expected: codes.len(), actual: lens.len() });
        }
        if codes.is_empty() {
            return Err(Error::EmptyColumn);
        }
        for (&c, &l) in codes.iter().zip(lens) {
            if l == 0 || l > 8 || (l < 8 && c >> (8 * l as u32) != 0) {
                return Err(Error::CodeOutOfRange { code: c, width: 8 * l as u32 });
            }
        }
        let n = codes.len();
        let k = *lens.iter().max().unwrap();
        let words = n.div_ceil(32);
        let mut slices: Vec<Vec<u8>> = (0..k).map(|_| Vec::new()).collect();
        slices[0].reserve(n + SLICE_PAD);
        let mut masks = vec![vec![0u32; words]; k as usize - 1];
        for (row, (&c, &l)) in codes.iter().zip(lens).enumerate() {
            slices[0].push(code_byte(c, l, 1));
            for j in 2..=l as usize {
                slices[j - 1].push(code_byte(c, l, j));
                masks[j - 2][row / 32] |= 1 << (row % 32);
            }
        }
        let slice_lens = slices.iter().map(Vec::len).collect();
        for s in &mut slices {
            s.resize(s.len() + SLICE_PAD, 0);
        }
        let mut col = Self { n_rows: n, lanes, k, slices, slice_lens, masks, directory: Vec::new() };
        col.directory = col.running_offsets();
        Ok(col)
    }

    /// Block offsets recomputed from running popcounts of the masks.
    fn running_offsets(&self) -> Vec<u32> {
        let kk = self.k as usize - 1;
        let blocks = self.lanes.blocks(self.n_rows);
        let mut dir = Vec::with_capacity(blocks * kk);
        let mut running = vec![0u32; kk];
        for b in 0..blocks {
            dir.extend_from_slice(&running);
            for (j, r) in running.iter_mut().enumerate() {
                *r += block_bits(&self.masks[j], b, self.lanes.lanes()).count_ones();
            }
        }
        dir
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Format(format!("vbs column: {m}")));
        if self.k == 0 || self.slices.len() != self.k as usize || self.masks.len() != self.k as usize - 1 {
            return bad("slice/mask count does not match K");
        }
        if self.slice_lens[0] != self.n_rows {
            return bad("BS_1 length differs from row count");
        }
        let words = self.n_rows.div_ceil(32);
        for (j, m) in self.masks.iter().enumerate() {
            if m.len() != words {
                return bad("mask word count");
            }
            let ones: usize = m.iter().map(|w| w.count_ones() as usize).sum();
            if ones != self.slice_lens[j + 1] {
                return bad("popcount(M_j) != |BS_j|");
            }
            if ResultBitVector::from_words(self.n_rows, m.clone()).is_err() {
                return bad("mask bits beyond the last row");
            }
            if j > 0 && m.iter().zip(&self.masks[j - 1]).any(|(a, b)| a & !b != 0) {
                return bad("existence masks are not prefix-closed");
            }
        }
        if self.directory != self.running_offsets() {
            return bad("directory disagrees with running popcounts");
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn lanes(&self) -> LaneConfig {
        self.lanes
    }

    /// `BS_j` without padding.
    pub fn slice(&self, j: usize) -> &[u8] {
        &self.slices[j - 1][..self.slice_lens[j - 1]]
    }

    /// `M_j` as LSB-first words, `j >= 2`.
    pub fn mask_words(&self, j: usize) -> &[u32] {
        &self.masks[j - 2]
    }

    pub fn directory(&self) -> &[u32] {
        &self.directory
    }

    /// Byte length of the code in `row`.
    pub fn code_len(&self, row: usize) -> u8 {
        1 + self.masks.iter().take_while(|m| m[row / 32] >> (row % 32) & 1 == 1).count() as u8
    }

    #[inline]
    fn offset(&self, j: usize, block: usize) -> usize {
        self.directory[block * (self.k as usize - 1) + j - 2] as usize
    }

    pub fn scan(
        &self,
        predicate: &CodePredicate,
        input: Option<&ResultBitVector>,
        opts: ScanOptions,
    ) -> Result<(ResultBitVector, ScanStats)> {
        scan(self, predicate, input, opts)
    }

    /// Reconstructs the selected codes, zero-padded to `K` bytes.
    pub fn lookup(&self, selection: &ResultBitVector) -> Result<(Vec<u64>, LookupStats)> {
        let mut out = Vec::with_capacity(selection.count_ones());
        let stats = self.lookup_into(selection, &mut out)?;
        Ok((out, stats))
    }

    /// Appends the selected codes to `out`, which callers may reuse.
    pub fn lookup_into(&self, selection: &ResultBitVector, out: &mut Vec<u64>) -> Result<LookupStats> {
        check_selection(self.n_rows, selection)?;
        out.reserve(selection.count_ones());
        Ok(match self.lanes.lanes() {
            8 => self.lookup_lanes::<8>(selection, out),
            16 => self.lookup_lanes::<16>(selection, out),
            32 => self.lookup_lanes::<32>(selection, out),
            _ => self.lookup_lanes::<64>(selection, out),
        })
    }

    fn lookup_lanes<const L: usize>(&self, selection: &ResultBitVector, out: &mut Vec<u64>) -> LookupStats {
        let k = self.k as usize;
        let pad = 8 * (k - 1) as u32;
        let bs1 = &self.slices[0];
        let mut stats = LookupStats::default();
        let mut exists = [0u64; 9];
        let mut picks = [0u64; 9];
        let mut base = [0usize; 9];
        for block in 0..self.lanes.blocks(self.n_rows) {
            let mut x = block_bits(selection.words(), block, L);
            if x == 0 {
                continue;
            }
            let first = block * L;
            let selected = x.count_ones() as u64;
            stats.codes += selected;
            stats.accesses += selected;
            // Every selected code is a single byte: no directory work.
            if k == 1 || x & block_bits(&self.masks[0], block, L) == 0 {
                while x != 0 {
                    let lane = lowest_set_index(x) as usize;
                    x = erase_rightmost(x);
                    out.push((bs1[first + lane] as u64) << pad);
                }
                continue;
            }
            // Local maximum depth among the selected codes.
            let mut beta = 1;
            for j in 2..=k {
                exists[j] = block_bits(&self.masks[j - 2], block, L);
                if x & exists[j] == 0 {
                    break;
                }
                beta += 1;
            }
            for j in 2..=beta {
                picks[j] = pext64(x, exists[j]);
                base[j] = self.offset(j, block);
                stats.accesses += picks[j].count_ones() as u64;
            }
            if beta == 2 {
                // Branch-free two-byte gather. With `picks` exhausted the read
                // lands at most 63 bytes past the block, inside the padding,
                // and is masked off.
                let (e2, b2, bs2) = (exists[2], base[2], &self.slices[1]);
                let mut p2 = picks[2];
                let shift = 8 * (k - 2) as u32;
                while x != 0 {
                    let lane = lowest_set_index(x);
                    x = erase_rightmost(x);
                    let has = (e2 >> lane) & 1;
                    let second = bs2[b2 + lowest_set_index(p2 | 1 << 63) as usize] as u64;
                    p2 = if has != 0 { erase_rightmost(p2) } else { p2 };
                    let code = ((bs1[first + lane as usize] as u64) << 8) | (second & has.wrapping_neg());
                    out.push(code << shift);
                }
                continue;
            }
            while x != 0 {
                let lane = lowest_set_index(x);
                let mut code = bs1[first + lane as usize] as u64;
                x = erase_rightmost(x);
                let mut len = 1;
                for j in 2..=beta {
                    if exists[j] & (1 << lane) == 0 {
                        break;
                    }
                    let r = base[j] + lowest_set_index(picks[j]) as usize;
                    code = (code << 8) | self.slices[j - 1][r] as u64;
                    picks[j] = erase_rightmost(picks[j]);
                    len += 1;
                }
                out.push(if len == 8 { code } else { code << (8 * (k - len)) });
            }
        }
        stats
    }

    pub fn size_report(&self) -> VbsSizeReport {
        let slice_bytes = self.slice_lens.clone();
        let mask_bytes = self.n_rows.div_ceil(8) * (self.k as usize - 1);
        let directory_bytes = self.directory.len() * 4;
        let data: usize = slice_bytes.iter().sum::<usize>() + mask_bytes;
        VbsSizeReport {
            slice_bytes,
            mask_bytes,
            directory_bytes,
            total_bytes: data + directory_bytes,
            avg_bits_per_code: 8.0 * data as f64 / self.n_rows as f64,
        }
    }

    /// `{K: u8, n_rows: u64}`, per slice `{len: u64, bytes}`, the masks as
    /// u32 words, then the directory grid as u32 words.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        put_u8(out, self.k);
        put_u64(out, self.n_rows as u64);
        for j in 1..=self.k as usize {
            put_bytes(out, self.slice(j));
        }
        for m in &self.masks {
            put_words(out, m);
        }
        put_words(out, &self.directory);
    }

    pub(crate) fn read_from(r: &mut Reader<'_>, lanes: LaneConfig) -> Result<Self> {
        let k = r.u8()?;
        let n_rows = r.len_u64()?;
        if k == 0 || k > 8 || n_rows == 0 {
            return Err(Error::Format(format!("vbs header K={k}, n_rows={n_rows}")));
        }
        let mut slices = Vec::with_capacity(k as usize);
        let mut slice_lens = Vec::with_capacity(k as usize);
        for _ in 0..k {
            let mut s = r.bytes()?.to_vec();
            slice_lens.push(s.len());
            s.resize(s.len() + SLICE_PAD, 0);
            slices.push(s);
        }
        let words = n_rows.div_ceil(32);
        let masks = (1..k).map(|_| r.words(words)).collect::<Result<Vec<_>>>()?;
        let directory = r.words(lanes.blocks(n_rows) * (k as usize - 1))?;
        let col = Self { n_rows, lanes, k, slices, slice_lens, masks, directory };
        col.validate()?;
        Ok(col)
    }
}

pub(crate) struct VbsLiteral {
    bytes: [u8; 8],
    len: usize,
}

impl BlockScan for VbsColumn {
    type Literal = VbsLiteral;

    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn lanes(&self) -> usize {
        self.lanes.lanes()
    }

    fn prepare(&self, lit: CodeLiteral) -> Result<Prepared<VbsLiteral>> {
        if lit.len == 0 || lit.len > self.k || (lit.len < 8 && lit.code >> (8 * lit.len as u32) != 0) {
            return Err(Error::CodeOutOfRange { code: lit.code, width: 8 * lit.len as u32 });
        }
        let mut bytes = [0u8; 8];
        for (j, b) in bytes.iter_mut().enumerate().take(lit.len as usize) {
            *b = code_byte(lit.code, lit.len, j + 1);
        }
        Ok(Prepared::Literal(VbsLiteral { bytes, len: lit.len as usize }))
    }

    #[inline(always)]
    fn compare_block<const L: usize>(&self, block: usize, lit: &VbsLiteral, active: u64, stats: &mut Tally) -> BlockOutcome {
        let lanes = L;
        let start = block * lanes;
        stats.load(1, lanes as u64);
        let (gt, eq) = cmp_bytes(&self.slices[0][start..start + lanes], lit.bytes[0]);
        let (z_gt, z_eq) = (active & gt, active & eq);
        if z_eq == 0 || (lit.len == 1 && self.k == 1) {
            return BlockOutcome { gt: z_gt, eq: z_eq, depth: 1 };
        }
        if lit.len == 1 {
            // Tied lanes with a second byte are strictly greater.
            let next = block_bits(&self.masks[0], block, L);
            stats.add_bytes((lanes / 8) as u64);
            return BlockOutcome { gt: z_gt | (z_eq & next), eq: z_eq & !next, depth: 1 };
        }
        self.compare_deeper::<L>(block, lit, z_gt, z_eq, stats)
    }
}

impl VbsColumn {
    /// Continues a block whose lanes are still tied after `BS_1`.
    #[inline(never)]
    fn compare_deeper<const L: usize>(&self, block: usize, lit: &VbsLiteral, mut z_gt: u64, mut z_eq: u64, stats: &mut Tally) -> BlockOutcome {
        let lanes = L;
        let mask_bytes = (lanes / 8) as u64;
        let (l, k) = (lit.len, self.k as usize);
        let mut depth = 1u8;
        // B_j for the slice about to be examined.
        let mut exists = 0u64;
        for j in 1..=l {
            if j > 1 {
                if z_eq == 0 {
                    break;
                }
                let present = exists.count_ones();
                let start = self.offset(j, block);
                stats.load(j, present as u64);
                let (g, e) = cmp_bytes(&self.slices[j - 1][start..start + lanes], lit.bytes[j - 1]);
                // Only the low `present` lanes belong to this block; move them
                // to the rows that own them.
                let m = low_mask(present);
                z_gt |= z_eq & pdep64(g & m, exists);
                z_eq &= pdep64(e & m, exists);
                depth = j as u8;
            }
            // The next mask is only needed while some lane is still tied.
            if z_eq == 0 || (j == l && l == k) {
                continue;
            }
            let next = block_bits(&self.masks[j - 1], block, L);
            stats.add_bytes(mask_bytes);
            if j < l {
                exists = next;
                z_eq &= next;
            } else {
                // Equal on every literal byte but longer: strictly greater,
                // since a code's trailing bytes are never all zero.
                z_gt |= z_eq & next;
                z_eq &= !next;
            }
        }
        BlockOutcome { gt: z_gt, eq: z_eq, depth }
    }
}

/// Byte-serial comparison of two prefix-preserving codes. Returns the order
/// and the number of bytes examined, which never exceeds the shorter length.
pub fn compare_codes(a: CodeLiteral, b: CodeLiteral) -> (Ordering, u8) {
    let m = a.len.min(b.len);
    for j in 1..=m as usize {
        let (x, y) = (code_byte(a.code, a.len, j), code_byte(b.code, b.len, j));
        if x != y {
            return (x.cmp(&y), j as u8);
        }
    }
    (a.len.cmp(&b.len), m)
}
