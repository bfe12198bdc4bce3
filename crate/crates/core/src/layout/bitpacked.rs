//! Bit-packed codes: `w` bits per row, back to back, most significant bit
//! of each code first in the stream.

use super::{check_selection, scan, BlockOutcome, BlockScan, Tally, LookupStats, Prepared, ScanOptions, ScanStats};
use crate::bits::{erase_rightmost, lowest_set_index};
use crate::bitvec::ResultBitVector;
use crate::codec::{put_bytes, put_u64, put_u8, Reader};
use crate::error::{Error, Result};
use crate::predicate::{CodeLiteral, CodePredicate, LaneConfig};

/// Trailing zero bytes so an unaligned 8-byte read at any code stays in bounds.
const STREAM_PAD: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitPackedColumn {
    n_rows: usize,
    lanes: LaneConfig,
    width: u8,
    bytes: Vec<u8>,
}

impl BitPackedColumn {
    pub fn build(codes: &[u64], width: u8, lanes: LaneConfig) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptyColumn);
        }
        if width == 0 || width > 32 {
            return Err(Error::InvalidConfig(format!("bit-packed width {width} outside 1..=32")));
        }
        let w = width as usize;
        let packed = (codes.len() * w).div_ceil(8);
        let mut bytes = vec![0u8; packed + STREAM_PAD];
        for (i, &c) in codes.iter().enumerate() {
            if c >> width != 0 {
                return Err(Error::CodeOutOfRange { code: c, width: width as u32 });
            }
            let bit = i * w;
            // Place the code at the top of a 64-bit window starting at byte bit/8.
            let window = c << (64 - w - bit % 8);
            for (k, b) in window.to_be_bytes().iter().enumerate().take((bit % 8 + w).div_ceil(8)) {
                bytes[bit / 8 + k] |= b;
            }
        }
        Ok(Self { n_rows: codes.len(), lanes, width, bytes })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn packed_bytes(&self) -> usize {
        self.bytes.len() - STREAM_PAD
    }

    /// The packed stream without padding.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.packed_bytes()]
    }

    #[inline]
    fn code_at(&self, row: usize) -> u64 {
        let bit = row * self.width as usize;
        let window = u64::from_be_bytes(self.bytes[bit / 8..bit / 8 + 8].try_into().unwrap());
        (window << (bit % 8)) >> (64 - self.width as u32)
    }

    /// Number of bytes the code in `row` spans.
    pub fn bytes_spanned(&self, row: usize) -> usize {
        let w = self.width as usize;
        (w + (row * w) % 8).div_ceil(8)
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
        let mut stats = LookupStats::default();
        for (w, &word) in selection.words().iter().enumerate() {
            let mut x = word as u64;
            while x != 0 {
                let row = w * 32 + lowest_set_index(x) as usize;
                x = erase_rightmost(x);
                out.push(self.code_at(row));
                stats.accesses += self.bytes_spanned(row) as u64;
                stats.codes += 1;
            }
        }
        Ok(stats)
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        put_u8(out, self.width);
        put_u64(out, self.n_rows as u64);
        put_bytes(out, self.as_bytes());
    }

    pub(crate) fn read_from(r: &mut Reader<'_>, lanes: LaneConfig) -> Result<Self> {
        let width = r.u8()?;
        let n_rows = r.len_u64()?;
        if width == 0 || width > 32 || n_rows == 0 {
            return Err(Error::Format(format!("bit-packed header w={width}, n_rows={n_rows}")));
        }
        let packed = r.bytes()?;
        let bits = n_rows * width as usize;
        if packed.len() != bits.div_ceil(8) {
            return Err(Error::Format("bit-packed stream length".into()));
        }
        if bits % 8 != 0 && packed.last().unwrap() & (0xFFu8 >> (bits % 8)) != 0 {
            return Err(Error::Format("non-zero bit-packed padding".into()));
        }
        let mut bytes = packed.to_vec();
        bytes.resize(packed.len() + STREAM_PAD, 0);
        Ok(Self { n_rows, lanes, width, bytes })
    }
}

impl BlockScan for BitPackedColumn {
    type Literal = u32;

    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn lanes(&self) -> usize {
        self.lanes.lanes()
    }

    fn prepare(&self, lit: CodeLiteral) -> Result<Prepared<u32>> {
        if lit.code >> self.width != 0 {
            return Ok(Prepared::AboveAll);
        }
        Ok(Prepared::Literal(lit.code as u32))
    }

    #[inline]
    fn compare_block<const L: usize>(&self, block: usize, lit: &u32, active: u64, stats: &mut Tally) -> BlockOutcome {
        let lanes = L;
        let first = block * lanes;
        let valid = lanes.min(self.n_rows - first);
        let mut unpacked = [0u32; 64];
        for (k, slot) in unpacked.iter_mut().enumerate().take(valid) {
            *slot = self.code_at(first + k) as u32;
        }
        let (mut gt, mut eq) = (0u64, 0u64);
        for (k, &v) in unpacked.iter().enumerate().take(valid) {
            gt |= ((v > *lit) as u64) << k;
            eq |= ((v == *lit) as u64) << k;
        }
        stats.load(1, (lanes * self.width as usize / 8) as u64);
        BlockOutcome { gt: gt & active, eq: eq & active, depth: 1 }
    }
}
