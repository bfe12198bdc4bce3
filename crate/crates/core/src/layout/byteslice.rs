//! ByteSlice: fixed-width codes split into byte-wide slices.
//!
//! Slice `j` holds byte `j` (most significant first) of every code. The last
//! slice keeps the low-order bits left-aligned with zero padding on the right.

use super::{check_selection, scan, BlockOutcome, BlockScan, Tally, LookupStats, Prepared, ScanOptions, ScanStats, SLICE_PAD};
use crate::bits::{cmp_bytes, erase_rightmost, lowest_set_index};
use crate::bitvec::ResultBitVector;
use crate::codec::{put_bytes, put_u64, put_u8, Reader};
use crate::error::{Error, Result};
use crate::predicate::{CodeLiteral, CodePredicate, LaneConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ByteSliceColumn {
    n_rows: usize,
    lanes: LaneConfig,
    width: u8,
    /// Each slice is `n_rows` bytes followed by `SLICE_PAD` zeros.
    slices: Vec<Vec<u8>>,
}

impl ByteSliceColumn {
    pub fn build(codes: &[u64], width: u8, lanes: LaneConfig) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptyColumn);
        }
        if width == 0 || width > 32 {
            return Err(Error::InvalidConfig(format!("byte slice width {width} outside 1..=32")));
        }
        let n_slices = width.div_ceil(8) as usize;
        let shift = 8 * n_slices as u32 - width as u32;
        let mut slices = vec![Vec::with_capacity(codes.len() + SLICE_PAD); n_slices];
        for &c in codes {
            if c >> width != 0 {
                return Err(Error::CodeOutOfRange { code: c, width: width as u32 });
            }
            let aligned = c << shift;
            for (j, s) in slices.iter_mut().enumerate() {
                s.push((aligned >> (8 * (n_slices - 1 - j))) as u8);
            }
        }
        for s in &mut slices {
            s.resize(codes.len() + SLICE_PAD, 0);
        }
        Ok(Self { n_rows: codes.len(), lanes, width, slices })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn lanes(&self) -> LaneConfig {
        self.lanes
    }

    /// Slice `j` (1-based) without padding.
    pub fn slice(&self, j: usize) -> &[u8] {
        &self.slices[j - 1][..self.n_rows]
    }

    fn pad_shift(&self) -> u32 {
        8 * self.n_slices() as u32 - self.width as u32
    }

    pub fn scan(
        &self,
        predicate: &CodePredicate,
        input: Option<&ResultBitVector>,
        opts: ScanOptions,
    ) -> Result<(ResultBitVector, ScanStats)> {
        scan(self, predicate, input, opts)
    }

    pub fn lookup(&self, selection: &ResultBitVector) -> Result<(Vec<u64>, LookupStats)> {
        let mut out = Vec::with_capacity(selection.count_ones());
        let stats = self.lookup_into(selection, &mut out)?;
        Ok((out, stats))
    }

    /// Appends the selected codes to `out`, which callers may reuse.
    pub fn lookup_into(&self, selection: &ResultBitVector, out: &mut Vec<u64>) -> Result<LookupStats> {
        check_selection(self.n_rows, selection)?;
        let start = out.len();
        let shift = self.pad_shift();
        for (w, &word) in selection.words().iter().enumerate() {
            let mut x = word as u64;
            while x != 0 {
                let row = w * 32 + lowest_set_index(x) as usize;
                x = erase_rightmost(x);
                let code = self.slices.iter().fold(0u64, |c, s| (c << 8) | s[row] as u64);
                out.push(code >> shift);
            }
        }
        let codes = (out.len() - start) as u64;
        Ok(LookupStats { accesses: codes * self.n_slices() as u64, codes })
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        put_u8(out, self.width);
        put_u64(out, self.n_rows as u64);
        for j in 1..=self.n_slices() {
            put_bytes(out, self.slice(j));
        }
    }

    pub(crate) fn read_from(r: &mut Reader<'_>, lanes: LaneConfig) -> Result<Self> {
        let width = r.u8()?;
        let n_rows = r.len_u64()?;
        if width == 0 || width > 32 || n_rows == 0 {
            return Err(Error::Format(format!("byte slice header w={width}, n_rows={n_rows}")));
        }
        let n_slices = width.div_ceil(8) as usize;
        let mut slices = Vec::with_capacity(n_slices);
        for _ in 0..n_slices {
            let s = r.bytes()?;
            if s.len() != n_rows {
                return Err(Error::Format("byte slice length differs from row count".into()));
            }
            let mut s = s.to_vec();
            s.resize(n_rows + SLICE_PAD, 0);
            slices.push(s);
        }
        let pad = low_bits(8 * n_slices as u32 - width as u32);
        if slices.last().unwrap().iter().any(|&b| b & pad != 0) {
            return Err(Error::Format("non-zero padding bits in the last byte slice".into()));
        }
        Ok(Self { n_rows, lanes, width, slices })
    }
}

fn low_bits(n: u32) -> u8 {
    ((1u16 << n) - 1) as u8
}

pub(crate) struct SliceLiteral {
    bytes: [u8; 4],
}

impl BlockScan for ByteSliceColumn {
    type Literal = SliceLiteral;

    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn lanes(&self) -> usize {
        self.lanes.lanes()
    }

    fn prepare(&self, lit: CodeLiteral) -> Result<Prepared<SliceLiteral>> {
        if lit.code >> self.width != 0 {
            return Ok(Prepared::AboveAll);
        }
        let n = self.n_slices();
        let aligned = lit.code << self.pad_shift();
        let mut bytes = [0u8; 4];
        for (j, b) in bytes.iter_mut().enumerate().take(n) {
            *b = (aligned >> (8 * (n - 1 - j))) as u8;
        }
        Ok(Prepared::Literal(SliceLiteral { bytes }))
    }

    #[inline(always)]
    fn compare_block<const L: usize>(&self, block: usize, lit: &SliceLiteral, active: u64, stats: &mut Tally) -> BlockOutcome {
        let lanes = L;
        let start = block * lanes;
        stats.load(1, lanes as u64);
        let (gt, eq) = cmp_bytes(&self.slices[0][start..start + lanes], lit.bytes[0]);
        let (z_gt, z_eq) = (active & gt, active & eq);
        if z_eq == 0 || self.slices.len() == 1 {
            return BlockOutcome { gt: z_gt, eq: z_eq, depth: 1 };
        }
        self.compare_deeper::<L>(block, lit, z_gt, z_eq, stats)
    }
}

impl ByteSliceColumn {
    /// Continues a block whose lanes are still tied after the first slice.
    #[inline(always)]
    fn compare_deeper<const L: usize>(&self, block: usize, lit: &SliceLiteral, mut z_gt: u64, mut z_eq: u64, stats: &mut Tally) -> BlockOutcome {
        let lanes = L;
        let start = block * lanes;
        let mut depth = 1u8;
        for (j, slice) in self.slices.iter().enumerate().skip(1) {
            if z_eq == 0 {
                break;
            }
            stats.load(j + 1, lanes as u64);
            let (gt, eq) = cmp_bytes(&slice[start..start + lanes], lit.bytes[j]);
            z_gt |= z_eq & gt;
            z_eq &= eq;
            depth = j as u8 + 1;
        }
        BlockOutcome { gt: z_gt, eq: z_eq, depth }
    }
}
