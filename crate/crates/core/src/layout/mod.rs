//! Physical column layouts and the block-at-a-time scan driver they share.

mod bitpacked;
mod byteslice;
mod vbp;
mod vbs;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use bitpacked::BitPackedColumn;
pub use byteslice::ByteSliceColumn;
pub use vbp::{VbpColumn, VbpKind};
pub use vbs::{compare_codes, VbsColumn, VbsSizeReport};

use crate::bits::{block_bits, low_mask, or_block_bits};
use crate::bitvec::ResultBitVector;
use crate::error::{Error, Result};
use crate::predicate::{CmpOp, CodeLiteral, CodePredicate};

/// Zero bytes appended to every byte slice so a block-sized load starting at
/// any logical offset stays in bounds.
pub(crate) const SLICE_PAD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    BitPacked,
    ByteSlice,
    Vbp,
    PeVbp,
    PpVbs,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 5] =
        [LayoutKind::BitPacked, LayoutKind::ByteSlice, LayoutKind::Vbp, LayoutKind::PeVbp, LayoutKind::PpVbs];

    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::BitPacked => "bit_packed",
            LayoutKind::ByteSlice => "byte_slice",
            LayoutKind::Vbp => "vbp",
            LayoutKind::PeVbp => "pe_vbp",
            LayoutKind::PpVbs => "pp_vbs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm || k.name().replace('_', "") == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown layout `{s}`")))
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            LayoutKind::BitPacked => 0,
            LayoutKind::ByteSlice => 1,
            LayoutKind::Vbp => 2,
            LayoutKind::PeVbp => 3,
            LayoutKind::PpVbs => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag).ok_or_else(|| Error::Format(format!("unknown layout tag {tag}")))
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scan instrumentation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScanStats {
    /// Word loads per slice or plane; index `j - 1` counts depth `j`.
    pub words_loaded: Vec<u64>,
    /// Bytes read from slices, planes and existence masks.
    pub bytes_loaded: u64,
    /// Index `d` counts blocks concluded after loading `d` slices or planes;
    /// index 0 counts blocks skipped because no lane was active.
    pub blocks_stopped_at: Vec<u64>,
    /// Deepest slice loaded per block, recorded when tracing is requested.
    pub block_depths: Option<Vec<u8>>,
}

impl ScanStats {
    fn traced(trace: bool) -> Self {
        Self { block_depths: trace.then(Vec::new), ..Self::default() }
    }

    /// Sums counters. Traces are concatenated when `sequential`, otherwise
    /// merged element-wise by maximum (two passes over the same blocks).
    fn merge(&mut self, other: ScanStats, sequential: bool) {
        add_vec(&mut self.words_loaded, &other.words_loaded);
        add_vec(&mut self.blocks_stopped_at, &other.blocks_stopped_at);
        self.bytes_loaded += other.bytes_loaded;
        match (&mut self.block_depths, other.block_depths) {
            (Some(a), Some(b)) if sequential => a.extend(b),
            (Some(a), Some(b)) => {
                if a.len() < b.len() {
                    a.resize(b.len(), 0);
                }
                for (x, y) in a.iter_mut().zip(b) {
                    *x = (*x).max(y);
                }
            }
            (None, Some(b)) => self.block_depths = Some(b),
            _ => {}
        }
    }

    /// Deepest slice or plane loaded by any block.
    pub fn max_depth(&self) -> usize {
        self.words_loaded.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1)
    }

    pub fn loads_at(&self, depth: usize) -> u64 {
        self.words_loaded.get(depth - 1).copied().unwrap_or(0)
    }
}

/// Fixed-size scan counters for the per-block hot path.
pub(crate) struct Tally {
    words: [u64; 64],
    stops: [u64; 65],
    bytes: u64,
    trace: Option<Vec<u8>>,
}

impl Tally {
    fn new(trace: bool) -> Self {
        Self { words: [0; 64], stops: [0; 65], bytes: 0, trace: trace.then(Vec::new) }
    }

    /// One word load at `depth` (1-based) of `bytes` bytes.
    #[inline(always)]
    pub(crate) fn load(&mut self, depth: usize, bytes: u64) {
        self.words[depth - 1] += 1;
        self.bytes += bytes;
    }

    #[inline(always)]
    pub(crate) fn add_bytes(&mut self, bytes: u64) {
        self.bytes += bytes;
    }

    #[inline(always)]
    fn conclude<const TRACE: bool>(&mut self, depth: u8) {
        self.stops[depth as usize] += 1;
        if TRACE {
            if let Some(t) = &mut self.trace {
                t.push(depth);
            }
        }
    }

    fn into_stats(self) -> ScanStats {
        let trim = |v: &[u64]| v[..v.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1)].to_vec();
        ScanStats {
            words_loaded: trim(&self.words),
            bytes_loaded: self.bytes,
            blocks_stopped_at: trim(&self.stops),
            block_depths: self.trace,
        }
    }
}

fn add_vec(a: &mut Vec<u64>, b: &[u64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LookupStats {
    /// Separate memory regions touched (slices, planes or byte spans).
    pub accesses: u64,
    pub codes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanOptions {
    pub threads: usize,
    pub trace: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { threads: 1, trace: false }
    }
}

impl ScanOptions {
    pub fn threads(threads: usize) -> Self {
        Self { threads, ..Self::default() }
    }

    pub fn traced() -> Self {
        Self { trace: true, ..Self::default() }
    }
}

/// Per-block lane comparison against a prepared literal.
pub(crate) struct BlockOutcome {
    pub gt: u64,
    pub eq: u64,
    pub depth: u8,
}

pub(crate) enum Prepared<L> {
    Literal(L),
    /// The literal exceeds every representable code.
    AboveAll,
}

pub(crate) trait BlockScan: Sync {
    type Literal: Sync;

    fn n_rows(&self) -> usize;
    fn lanes(&self) -> usize;
    fn prepare(&self, lit: CodeLiteral) -> Result<Prepared<Self::Literal>>;
    /// `gt`/`eq` must be subsets of `active`.
    /// `L` equals `lanes()`; it is a constant so the per-block code specialises.
    fn compare_block<const L: usize>(&self, block: usize, lit: &Self::Literal, active: u64, stats: &mut Tally) -> BlockOutcome;
}

pub(crate) fn scan<K: BlockScan>(
    kernel: &K,
    predicate: &CodePredicate,
    input: Option<&ResultBitVector>,
    opts: ScanOptions,
) -> Result<(ResultBitVector, ScanStats)> {
    let n = kernel.n_rows();
    if let Some(m) = input {
        if m.n_rows() != n {
            return Err(Error::LengthMismatch { expected: n, actual: m.n_rows() });
        }
    }
    let all = || input.cloned().unwrap_or_else(|| ResultBitVector::ones(n));
    match *predicate {
        CodePredicate::Const(true) => Ok((all(), ScanStats::traced(opts.trace))),
        CodePredicate::Const(false) => Ok((ResultBitVector::zeros(n), ScanStats::traced(opts.trace))),
        CodePredicate::Between(lo, hi) => {
            let (first, mut stats) = scan(kernel, &CodePredicate::Cmp(CmpOp::Ge, lo), input, opts)?;
            let (out, second) = scan(kernel, &CodePredicate::Cmp(CmpOp::Le, hi), Some(&first), opts)?;
            stats.merge(second, false);
            Ok((out, stats))
        }
        CodePredicate::Cmp(op, lit) => match kernel.prepare(lit)? {
            Prepared::AboveAll => {
                let out = match op {
                    CmpOp::Lt | CmpOp::Le | CmpOp::Ne => all(),
                    CmpOp::Gt | CmpOp::Ge | CmpOp::Eq => ResultBitVector::zeros(n),
                };
                Ok((out, ScanStats::traced(opts.trace)))
            }
            Prepared::Literal(lit) => {
                let parts = partition(kernel.lanes(), n, opts.threads.max(1));
                if parts.len() <= 1 {
                    return Ok(scan_range(kernel, op, &lit, input, 0..kernel.blocks(), opts.trace));
                }
                let results: Vec<(ResultBitVector, ScanStats)> = std::thread::scope(|s| {
                    let handles: Vec<_> = parts
                        .into_iter()
                        .map(|r| {
                            let lit = &lit;
                            s.spawn(move || scan_range(kernel, op, lit, input, r, opts.trace))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
                });
                let mut stats = ScanStats::traced(opts.trace);
                let mut frags = Vec::with_capacity(results.len());
                for (frag, s) in results {
                    stats.merge(s, true);
                    frags.push(frag);
                }
                Ok((ResultBitVector::concat(frags)?, stats))
            }
        },
    }
}

trait Blocks {
    fn blocks(&self) -> usize;
}

impl<K: BlockScan> Blocks for K {
    fn blocks(&self) -> usize {
        self.n_rows().div_ceil(self.lanes())
    }
}

/// Splits the blocks of a column into at most `threads` contiguous ranges
/// whose boundaries fall on 32-row word boundaries.
pub fn partition(lanes: usize, n_rows: usize, threads: usize) -> Vec<Range<usize>> {
    let blocks = n_rows.div_ceil(lanes);
    let align = (32 / lanes).max(1);
    let units = blocks.div_ceil(align);
    let per = units.div_ceil(threads.max(1)).max(1);
    (0..units)
        .step_by(per)
        .map(|u| (u * align)..((u + per) * align).min(blocks))
        .collect()
}

/// Scans blocks `blocks` and returns the fragment of the result covering
/// exactly those rows.
pub(crate) fn scan_range<K: BlockScan>(
    kernel: &K,
    op: CmpOp,
    lit: &K::Literal,
    input: Option<&ResultBitVector>,
    blocks: Range<usize>,
    trace: bool,
) -> (ResultBitVector, ScanStats) {
    // One monomorphic loop per operator keeps the combine out of the hot path.
    match op {
        CmpOp::Lt => scan_blocks(kernel, lit, input, blocks, trace, |a, g, e| a & !(g | e)),
        CmpOp::Le => scan_blocks(kernel, lit, input, blocks, trace, |a, g, _| a & !g),
        CmpOp::Gt => scan_blocks(kernel, lit, input, blocks, trace, |_, g, _| g),
        CmpOp::Ge => scan_blocks(kernel, lit, input, blocks, trace, |_, g, e| g | e),
        CmpOp::Eq => scan_blocks(kernel, lit, input, blocks, trace, |_, _, e| e),
        CmpOp::Ne => scan_blocks(kernel, lit, input, blocks, trace, |a, _, e| a & !e),
    }
}

#[inline(always)]
fn scan_blocks<K: BlockScan>(
    kernel: &K,
    lit: &K::Literal,
    input: Option<&ResultBitVector>,
    blocks: Range<usize>,
    trace: bool,
    combine: impl Fn(u64, u64, u64) -> u64,
) -> (ResultBitVector, ScanStats) {
    match kernel.lanes() {
        8 => scan_lanes::<K, 8>(kernel, lit, input, blocks, trace, combine),
        16 => scan_lanes::<K, 16>(kernel, lit, input, blocks, trace, combine),
        32 => scan_lanes::<K, 32>(kernel, lit, input, blocks, trace, combine),
        64 => scan_lanes::<K, 64>(kernel, lit, input, blocks, trace, combine),
        other => unreachable!("lane count {other} rejected by LaneConfig"),
    }
}

#[inline(always)]
fn scan_lanes<K: BlockScan, const L: usize>(
    kernel: &K,
    lit: &K::Literal,
    input: Option<&ResultBitVector>,
    blocks: Range<usize>,
    trace: bool,
    combine: impl Fn(u64, u64, u64) -> u64,
) -> (ResultBitVector, ScanStats) {
    match (input, trace) {
        (None, false) => scan_loop::<K, L, false>(kernel, lit, |_| u64::MAX, blocks, combine),
        (None, true) => scan_loop::<K, L, true>(kernel, lit, |_| u64::MAX, blocks, combine),
        (Some(m), false) => scan_loop::<K, L, false>(kernel, lit, |b| block_bits(m.words(), b, L), blocks, combine),
        (Some(m), true) => scan_loop::<K, L, true>(kernel, lit, |b| block_bits(m.words(), b, L), blocks, combine),
    }
}

#[inline(always)]
fn scan_loop<K: BlockScan, const L: usize, const TRACE: bool>(
    kernel: &K,
    lit: &K::Literal,
    input: impl Fn(usize) -> u64,
    blocks: Range<usize>,
    combine: impl Fn(u64, u64, u64) -> u64,
) -> (ResultBitVector, ScanStats) {
    let n = kernel.n_rows();
    let first_row = blocks.start * L;
    let end_row = (blocks.end * L).min(n);
    let mut out = ResultBitVector::zeros(end_row.saturating_sub(first_row));
    let mut stats = Tally::new(TRACE);
    let words = out.words_mut();
    // Full blocks first, then the partial tail block if this range has it.
    let full_end = blocks.end.min(n / L).max(blocks.start);
    let mut visit = |block: usize, valid: u64, stats: &mut Tally| {
        let active = valid & input(block);
        if active == 0 {
            stats.conclude::<TRACE>(0);
            return;
        }
        let BlockOutcome { gt, eq, depth } = kernel.compare_block::<L>(block, lit, active, stats);
        stats.conclude::<TRACE>(depth);
        let hit = combine(active, gt, eq);
        if hit != 0 {
            or_block_bits(words, block - blocks.start, L, hit);
        }
    };
    for block in blocks.start..full_end {
        visit(block, low_mask(L as u32), &mut stats);
    }
    for block in full_end..blocks.end {
        visit(block, low_mask((n - block * L) as u32), &mut stats);
    }
    (out, stats.into_stats())
}

/// A column stored in one of the physical layouts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayoutColumn {
    BitPacked(BitPackedColumn),
    ByteSlice(ByteSliceColumn),
    Vbp(VbpColumn),
    PpVbs(VbsColumn),
}

impl LayoutColumn {
    pub fn kind(&self) -> LayoutKind {
        match self {
            LayoutColumn::BitPacked(_) => LayoutKind::BitPacked,
            LayoutColumn::ByteSlice(_) => LayoutKind::ByteSlice,
            LayoutColumn::Vbp(c) if c.kind() == VbpKind::PaddedEncoding => LayoutKind::PeVbp,
            LayoutColumn::Vbp(_) => LayoutKind::Vbp,
            LayoutColumn::PpVbs(_) => LayoutKind::PpVbs,
        }
    }

    pub fn n_rows(&self) -> usize {
        match self {
            LayoutColumn::BitPacked(c) => c.n_rows(),
            LayoutColumn::ByteSlice(c) => c.n_rows(),
            LayoutColumn::Vbp(c) => c.n_rows(),
            LayoutColumn::PpVbs(c) => c.n_rows(),
        }
    }

    pub fn scan(
        &self,
        predicate: &CodePredicate,
        input: Option<&ResultBitVector>,
        opts: ScanOptions,
    ) -> Result<(ResultBitVector, ScanStats)> {
        match self {
            LayoutColumn::BitPacked(c) => c.scan(predicate, input, opts),
            LayoutColumn::ByteSlice(c) => c.scan(predicate, input, opts),
            LayoutColumn::Vbp(c) => c.scan(predicate, input, opts),
            LayoutColumn::PpVbs(c) => c.scan(predicate, input, opts),
        }
    }

    /// Padded codes of the selected rows in ascending row order.
    pub fn lookup(&self, selection: &ResultBitVector) -> Result<(Vec<u64>, LookupStats)> {
        match self {
            LayoutColumn::BitPacked(c) => c.lookup(selection),
            LayoutColumn::ByteSlice(c) => c.lookup(selection),
            LayoutColumn::Vbp(c) => c.lookup(selection),
            LayoutColumn::PpVbs(c) => c.lookup(selection),
        }
    }

    /// Appends the selected codes to `out`.
    pub fn lookup_into(&self, selection: &ResultBitVector, out: &mut Vec<u64>) -> Result<LookupStats> {
        match self {
            LayoutColumn::BitPacked(c) => c.lookup_into(selection, out),
            LayoutColumn::ByteSlice(c) => c.lookup_into(selection, out),
            LayoutColumn::Vbp(c) => c.lookup_into(selection, out),
            LayoutColumn::PpVbs(c) => c.lookup_into(selection, out),
        }
    }

    /// Storage bytes, excluding the VBS block directory.
    pub fn data_bytes(&self) -> usize {
        match self {
            LayoutColumn::BitPacked(c) => c.packed_bytes(),
            LayoutColumn::ByteSlice(c) => c.n_slices() * c.n_rows(),
            LayoutColumn::Vbp(c) => c.width() as usize * c.n_rows().div_ceil(8),
            LayoutColumn::PpVbs(c) => {
                let r = c.size_report();
                r.total_bytes - r.directory_bytes
            }
        }
    }

    pub fn bits_per_code(&self) -> f64 {
        8.0 * self.data_bytes() as f64 / self.n_rows() as f64
    }
}

pub(crate) fn check_selection(n_rows: usize, selection: &ResultBitVector) -> Result<()> {
    if selection.n_rows() != n_rows {
        return Err(Error::LengthMismatch { expected: n_rows, actual: selection.n_rows() });
    }
    Ok(())
}
