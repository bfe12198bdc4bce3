//! Vertical bit-parallel layout: one bit plane per code bit.
//!
//! Plane `j` holds the `j`-th most significant bit of every code. The padded
//! variant stores variable-length prefix-free codes zero-padded on the right
//! to the longest code.

use super::{check_selection, scan, BlockOutcome, BlockScan, Tally, LookupStats, Prepared, ScanOptions, ScanStats};
use crate::bits::{block_bits, erase_rightmost, lowest_set_index};
use crate::bitvec::ResultBitVector;
use crate::codec::{put_u64, put_u8, put_words, Reader};
use crate::error::{Error, Result};
use crate::predicate::{CodeLiteral, CodePredicate, LaneConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VbpKind {
    Plain,
    PaddedEncoding,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VbpColumn {
    n_rows: usize,
    lanes: LaneConfig,
    width: u8,
    kind: VbpKind,
    /// `planes[j - 1]` is `W_j`, LSB-first words of `n_rows` bits.
    planes: Vec<Vec<u32>>,
}

impl VbpColumn {
    /// `codes` are already padded to `width` bits.
    pub fn build(codes: &[u64], width: u8, kind: VbpKind, lanes: LaneConfig) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptyColumn);
        }
        if width == 0 || width > 64 {
            return Err(Error::InvalidConfig(format!("bit plane count {width} outside 1..=64")));
        }
        let words = codes.len().div_ceil(32);
        let mut planes = vec![vec![0u32; words]; width as usize];
        for (i, &c) in codes.iter().enumerate() {
            if width < 64 && c >> width != 0 {
                return Err(Error::CodeOutOfRange { code: c, width: width as u32 });
            }
            for (j, plane) in planes.iter_mut().enumerate() {
                let bit = (c >> (width as usize - 1 - j)) & 1;
                plane[i / 32] |= (bit as u32) << (i % 32);
            }
        }
        Ok(Self { n_rows: codes.len(), lanes, width, kind, planes })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn kind(&self) -> VbpKind {
        self.kind
    }

    /// Plane `j` (1-based).
    pub fn plane(&self, j: usize) -> &[u32] {
        &self.planes[j - 1]
    }

    pub fn scan(
        &self,
        predicate: &CodePredicate,
        input: Option<&ResultBitVector>,
        opts: ScanOptions,
    ) -> Result<(ResultBitVector, ScanStats)> {
        scan(self, predicate, input, opts)
    }

    /// Gathers one bit from every plane for each selected row.
    pub fn lookup(&self, selection: &ResultBitVector) -> Result<(Vec<u64>, LookupStats)> {
        let mut out = Vec::with_capacity(selection.count_ones());
        let stats = self.lookup_into(selection, &mut out)?;
        Ok((out, stats))
    }

    /// Appends the selected codes to `out`, which callers may reuse.
    pub fn lookup_into(&self, selection: &ResultBitVector, out: &mut Vec<u64>) -> Result<LookupStats> {
        check_selection(self.n_rows, selection)?;
        let start = out.len();
        for (w, &word) in selection.words().iter().enumerate() {
            let mut x = word as u64;
            while x != 0 {
                let bit = lowest_set_index(x);
                x = erase_rightmost(x);
                out.push(self.planes.iter().fold(0u64, |c, p| (c << 1) | ((p[w] >> bit) & 1) as u64));
            }
        }
        let codes = (out.len() - start) as u64;
        Ok(LookupStats { accesses: codes * self.width as u64, codes })
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        put_u8(out, self.width);
        put_u8(out, (self.kind == VbpKind::PaddedEncoding) as u8);
        put_u64(out, self.n_rows as u64);
        for p in &self.planes {
            put_words(out, p);
        }
    }

    pub(crate) fn read_from(r: &mut Reader<'_>, lanes: LaneConfig) -> Result<Self> {
        let width = r.u8()?;
        let kind = match r.u8()? {
            0 => VbpKind::Plain,
            1 => VbpKind::PaddedEncoding,
            k => return Err(Error::Format(format!("unknown bit plane kind {k}"))),
        };
        let n_rows = r.len_u64()?;
        if width == 0 || width > 64 || n_rows == 0 {
            return Err(Error::Format(format!("bit plane header w={width}, n_rows={n_rows}")));
        }
        let words = n_rows.div_ceil(32);
        let planes = (0..width)
            .map(|_| {
                let p = r.words(words)?;
                ResultBitVector::from_words(n_rows, p.clone())
                    .map_err(|_| Error::Format("bit plane has bits beyond the last row".into()))?;
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_rows, lanes, width, kind, planes })
    }
}

impl BlockScan for VbpColumn {
    /// The literal's bits, aligned like the stored codes.
    type Literal = u64;

    fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn lanes(&self) -> usize {
        self.lanes.lanes()
    }

    fn prepare(&self, lit: CodeLiteral) -> Result<Prepared<u64>> {
        let aligned = match self.kind {
            VbpKind::Plain => lit.code,
            VbpKind::PaddedEncoding => {
                if lit.len == 0 || lit.len > self.width {
                    return Err(Error::CodeOutOfRange { code: lit.code, width: lit.len as u32 });
                }
                let shift = (self.width - lit.len) as u32;
                if shift >= 64 {
                    0
                } else {
                    lit.code << shift
                }
            }
        };
        if self.width < 64 && aligned >> self.width != 0 {
            return Ok(Prepared::AboveAll);
        }
        Ok(Prepared::Literal(aligned))
    }

    #[inline]
    fn compare_block<const L: usize>(&self, block: usize, lit: &u64, active: u64, stats: &mut Tally) -> BlockOutcome {
        let lanes = L;
        let w = self.width as usize;
        let mut z_eq = active;
        let mut z_gt = 0u64;
        let mut depth = 0u8;
        for (j, plane) in self.planes.iter().enumerate() {
            if z_eq == 0 {
                break;
            }
            stats.load(j + 1, (lanes / 8) as u64);
            let p = block_bits(plane, block, lanes);
            if (lit >> (w - 1 - j)) & 1 == 1 {
                z_eq &= p;
            } else {
                z_gt |= z_eq & p;
                z_eq &= !p;
            }
            depth = j as u8 + 1;
        }
        BlockOutcome { gt: z_gt, eq: z_eq, depth }
    }
}
