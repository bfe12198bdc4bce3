//! A dictionary-encoded column stored in one physical layout.

use std::hash::Hash;

use crate::bitvec::ResultBitVector;
use crate::codec::{put_u8, Reader};
use crate::dict::{AssignmentKind, Dictionary};
use crate::error::{Error, Result};
use crate::layout::{
    BitPackedColumn, ByteSliceColumn, LayoutColumn, LayoutKind, LookupStats, ScanOptions, ScanStats, VbpColumn,
    VbpKind, VbsColumn,
};
use crate::predicate::{CodePredicate, ColumnKind, LaneConfig, Predicate, Value};

#[derive(Clone, Debug)]
pub struct EncodedColumn {
    dict: Dictionary,
    layout: LayoutColumn,
}

/// The code assignment a layout stores for a column kind.
pub fn assignment_for(kind: ColumnKind, layout: LayoutKind) -> AssignmentKind {
    match layout {
        LayoutKind::PpVbs if kind == ColumnKind::Categorical => AssignmentKind::PpeCategorical,
        LayoutKind::PpVbs => AssignmentKind::PpeNumerical,
        LayoutKind::PeVbp => AssignmentKind::PrefixFree,
        _ => AssignmentKind::Fixed,
    }
}

impl EncodedColumn {
    pub fn build<T>(rows: &[T], kind: ColumnKind, layout: LayoutKind, lanes: LaneConfig) -> Result<Self>
    where
        T: Hash + Eq + Clone + Into<Value>,
    {
        let (dict, positions) = Dictionary::build(rows, kind, assignment_for(kind, layout))?;
        Self::from_positions(dict, &positions, layout, lanes)
    }

    /// Stores rows given as positions in `dict`'s table.
    pub fn from_positions(dict: Dictionary, positions: &[u32], layout: LayoutKind, lanes: LaneConfig) -> Result<Self> {
        let a = dict.assignment();
        if a.kind != assignment_for(dict.kind(), layout) {
            return Err(Error::InvalidConfig(format!("{layout} cannot store {:?} codes", a.kind)));
        }
        let layout = match layout {
            LayoutKind::PpVbs => {
                let (codes, lens) = dict.row_codes(positions);
                LayoutColumn::PpVbs(VbsColumn::build(&codes, &lens, lanes)?)
            }
            LayoutKind::PeVbp => {
                let padded: Vec<u64> = positions.iter().map(|&p| a.padded(p as usize)).collect();
                LayoutColumn::Vbp(VbpColumn::build(&padded, a.max_len, VbpKind::PaddedEncoding, lanes)?)
            }
            fixed => {
                let codes: Vec<u64> = positions.iter().map(|&p| a.codes[p as usize]).collect();
                match fixed {
                    LayoutKind::BitPacked => LayoutColumn::BitPacked(BitPackedColumn::build(&codes, a.width, lanes)?),
                    LayoutKind::ByteSlice => LayoutColumn::ByteSlice(ByteSliceColumn::build(&codes, a.width, lanes)?),
                    _ => LayoutColumn::Vbp(VbpColumn::build(&codes, a.width, VbpKind::Plain, lanes)?),
                }
            }
        };
        Ok(Self { dict, layout })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn layout(&self) -> &LayoutColumn {
        &self.layout
    }

    pub fn layout_kind(&self) -> LayoutKind {
        self.layout.kind()
    }

    pub fn kind(&self) -> ColumnKind {
        self.dict.kind()
    }

    pub fn n_rows(&self) -> usize {
        self.layout.n_rows()
    }

    pub fn resolve(&self, predicate: &Predicate) -> Result<CodePredicate> {
        self.dict.encode_literal(predicate)
    }

    pub fn scan(
        &self,
        predicate: &Predicate,
        input: Option<&ResultBitVector>,
        opts: ScanOptions,
    ) -> Result<(ResultBitVector, ScanStats)> {
        self.layout.scan(&self.resolve(predicate)?, input, opts)
    }

    /// Table positions of the selected rows, in row order.
    pub fn lookup_positions(&self, selection: &ResultBitVector) -> Result<(Vec<usize>, LookupStats)> {
        let (codes, stats) = self.layout.lookup(selection)?;
        let positions = codes.into_iter().map(|c| self.dict.decode_position(c)).collect::<Result<_>>()?;
        Ok((positions, stats))
    }

    pub fn lookup_values(&self, selection: &ResultBitVector) -> Result<Vec<Value>> {
        let (positions, _) = self.lookup_positions(selection)?;
        Ok(positions.into_iter().map(|p| self.dict.value(p).clone()).collect())
    }

    /// Dictionary section, then the layout tag and payload.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        self.dict.write_to(out);
        put_u8(out, self.layout.kind().tag());
        match &self.layout {
            LayoutColumn::BitPacked(c) => c.write_to(out),
            LayoutColumn::ByteSlice(c) => c.write_to(out),
            LayoutColumn::Vbp(c) => c.write_to(out),
            LayoutColumn::PpVbs(c) => c.write_to(out),
        }
    }

    pub(crate) fn read_from(r: &mut Reader<'_>, lanes: LaneConfig) -> Result<Self> {
        let dict = Dictionary::read_from(r)?;
        let kind = LayoutKind::from_tag(r.u8()?)?;
        let layout = match kind {
            LayoutKind::BitPacked => LayoutColumn::BitPacked(BitPackedColumn::read_from(r, lanes)?),
            LayoutKind::ByteSlice => LayoutColumn::ByteSlice(ByteSliceColumn::read_from(r, lanes)?),
            LayoutKind::Vbp | LayoutKind::PeVbp => LayoutColumn::Vbp(VbpColumn::read_from(r, lanes)?),
            LayoutKind::PpVbs => LayoutColumn::PpVbs(VbsColumn::read_from(r, lanes)?),
        };
        if layout.kind() != kind || dict.assignment().kind != assignment_for(dict.kind(), kind) {
            return Err(Error::Format(format!("layout {kind} does not match its dictionary")));
        }
        Ok(Self { dict, layout })
    }
}
