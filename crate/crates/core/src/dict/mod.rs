//! Dictionaries: frequency tables, code assignments, literal resolution and
//! decoding.

mod ppe;
mod prefix_free;

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

pub use ppe::{ppe_categorical, ppe_numerical};
pub use prefix_free::{prefix_free_encode, prefix_free_encode_capped, MAX_PREFIX_FREE_BITS};

use crate::codec::{put_bytes, put_u64, put_u8, Reader};
use crate::error::{Error, Result};
use crate::predicate::{CmpOp, CodeLiteral, CodePredicate, ColumnKind, Predicate, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableOrder {
    AscendingValue,
    DescendingWeight,
}

/// Distinct values of a column with their occurrence counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyTable {
    pub values: Vec<Value>,
    pub weights: Vec<u64>,
    pub order: TableOrder,
}

impl FrequencyTable {
    pub fn build<T>(rows: &[T], order: TableOrder) -> Result<Self>
    where
        T: Hash + Eq + Clone + Into<Value>,
    {
        Self::build_with_rows(rows, order).map(|(t, _)| t)
    }

    /// Builds the table and maps every row to its position in the table.
    ///
    /// Descending-weight ties are broken by first appearance in `rows`.
    pub fn build_with_rows<T>(rows: &[T], order: TableOrder) -> Result<(Self, Vec<u32>)>
    where
        T: Hash + Eq + Clone + Into<Value>,
    {
        if rows.is_empty() {
            return Err(Error::EmptyColumn);
        }
        let mut ids: HashMap<&T, u32> = HashMap::new();
        let mut first_seen: Vec<&T> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        let mut row_ids = Vec::with_capacity(rows.len());
        for v in rows {
            let id = *ids.entry(v).or_insert_with(|| {
                first_seen.push(v);
                counts.push(0);
                (first_seen.len() - 1) as u32
            });
            counts[id as usize] += 1;
            row_ids.push(id);
        }
        if first_seen.len() > u32::MAX as usize {
            return Err(Error::WidthOverflow { distinct: first_seen.len() });
        }
        let values: Vec<Value> = first_seen.into_iter().map(|v| v.clone().into()).collect();
        let mut perm: Vec<u32> = (0..values.len() as u32).collect();
        match order {
            TableOrder::AscendingValue => perm.sort_by(|&a, &b| values[a as usize].cmp(&values[b as usize])),
            // Stable sort keeps first-appearance order among ties.
            TableOrder::DescendingWeight => perm.sort_by_key(|&i| std::cmp::Reverse(counts[i as usize])),
        }
        let mut position = vec![0u32; perm.len()];
        for (pos, &id) in perm.iter().enumerate() {
            position[id as usize] = pos as u32;
        }
        for r in &mut row_ids {
            *r = position[*r as usize];
        }
        let table = FrequencyTable {
            values: perm.iter().map(|&i| values[i as usize].clone()).collect(),
            weights: perm.iter().map(|&i| counts[i as usize]).collect(),
            order,
        };
        Ok((table, row_ids))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentKind {
    Fixed,
    PpeNumerical,
    PpeCategorical,
    PrefixFree,
}

impl AssignmentKind {
    pub fn table_order(self) -> TableOrder {
        match self {
            AssignmentKind::PpeCategorical => TableOrder::DescendingWeight,
            _ => TableOrder::AscendingValue,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            AssignmentKind::Fixed => 0,
            AssignmentKind::PpeNumerical => 1,
            AssignmentKind::PpeCategorical => 2,
            AssignmentKind::PrefixFree => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => AssignmentKind::Fixed,
            1 => AssignmentKind::PpeNumerical,
            2 => AssignmentKind::PpeCategorical,
            3 => AssignmentKind::PrefixFree,
            t => return Err(Error::Format(format!("unknown assignment kind {t}"))),
        })
    }
}

/// Codes for the entries of a frequency table, position for position.
///
/// `lengths` are in bytes for fixed and prefix-preserving kinds and in bits
/// for prefix-free codes. `max_len` is the maximum length in the same unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeAssignment {
    pub kind: AssignmentKind,
    pub codes: Vec<u64>,
    pub lengths: Vec<u8>,
    pub max_len: u8,
    /// Bit width of fixed-length codes; 0 for the variable-length kinds.
    pub width: u8,
}

impl CodeAssignment {
    pub fn fixed(n: usize) -> Result<Self> {
        let width = fixed_width(n)?;
        let len = width.div_ceil(8);
        Ok(Self {
            kind: AssignmentKind::Fixed,
            codes: (0..n as u64).collect(),
            lengths: vec![len; n],
            max_len: len,
            width,
        })
    }

    pub fn for_table(kind: AssignmentKind, table: &FrequencyTable) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::EmptyColumn);
        }
        if kind.table_order() != table.order {
            return Err(Error::InvalidConfig(format!("{kind:?} needs a {:?} table", kind.table_order())));
        }
        let (codes, lengths) = match kind {
            AssignmentKind::Fixed => return Self::fixed(table.len()),
            AssignmentKind::PpeNumerical => ppe_numerical(&table.weights),
            AssignmentKind::PpeCategorical => ppe_categorical(table.len()),
            AssignmentKind::PrefixFree => prefix_free_encode(&table.weights),
        };
        Self::from_parts(kind, codes, lengths)
    }

    pub(crate) fn from_parts(kind: AssignmentKind, codes: Vec<u64>, lengths: Vec<u8>) -> Result<Self> {
        let max_len = lengths.iter().copied().max().unwrap_or(0);
        let limit = if kind == AssignmentKind::PrefixFree { 64 } else { 8 };
        if max_len == 0 || max_len > limit {
            return Err(Error::Format(format!("code length {max_len} out of range")));
        }
        let width = if kind == AssignmentKind::Fixed { fixed_width(codes.len())? } else { 0 };
        Ok(Self { kind, codes, lengths, max_len, width })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Bits per length unit.
    pub fn unit_bits(&self) -> u32 {
        if self.kind == AssignmentKind::PrefixFree {
            1
        } else {
            8
        }
    }

    /// Code `i` left-aligned to the maximum length (fixed codes are returned
    /// as-is).
    #[inline]
    pub fn padded(&self, i: usize) -> u64 {
        self.pad(self.codes[i], self.lengths[i])
    }

    #[inline]
    pub fn pad(&self, code: u64, len: u8) -> u64 {
        if self.kind == AssignmentKind::Fixed {
            return code;
        }
        let shift = (self.max_len - len) as u32 * self.unit_bits();
        if shift >= 64 {
            0
        } else {
            code << shift
        }
    }

    /// Bits in a padded code.
    pub fn padded_bits(&self) -> u32 {
        match self.kind {
            AssignmentKind::Fixed => self.width as u32,
            _ => self.max_len as u32 * self.unit_bits(),
        }
    }

    pub fn literal(&self, i: usize) -> CodeLiteral {
        CodeLiteral { code: self.codes[i], len: self.lengths[i] }
    }

    /// Frequency-weighted average code length in bits, padding excluded.
    pub fn weighted_avg_bits(&self, weights: &[u64]) -> f64 {
        let unit = self.unit_bits() as f64;
        let bits = |i: usize| match self.kind {
            AssignmentKind::Fixed => self.width as f64,
            _ => self.lengths[i] as f64 * unit,
        };
        let total: u64 = weights.iter().sum();
        (0..self.len()).map(|i| bits(i) * weights[i] as f64).sum::<f64>() / total as f64
    }
}

/// `max(1, ceil(log2 n))`, rejecting widths beyond 32 bits.
pub fn fixed_width(n: usize) -> Result<u8> {
    if n > 1usize << 32 {
        return Err(Error::WidthOverflow { distinct: n });
    }
    let w = if n <= 1 { 1 } else { usize::BITS - (n - 1).leading_zeros() };
    Ok(w.max(1) as u8)
}

/// A column dictionary: table, codes and the reverse map from padded codes.
#[derive(Clone, Debug)]
pub struct Dictionary {
    kind: ColumnKind,
    table: FrequencyTable,
    assignment: CodeAssignment,
    by_padded: HashMap<u64, u32>,
    by_value: HashMap<Value, u32>,
}

impl Dictionary {
    /// Builds a dictionary for `rows` and returns it with the per-row table
    /// positions.
    pub fn build<T>(rows: &[T], kind: ColumnKind, assignment: AssignmentKind) -> Result<(Self, Vec<u32>)>
    where
        T: Hash + Eq + Clone + Into<Value>,
    {
        if assignment == AssignmentKind::PpeCategorical && kind.is_ordered() {
            return Err(Error::InvalidConfig(format!("{kind:?} columns need an order-preserving encoding")));
        }
        let (table, rows) = FrequencyTable::build_with_rows(rows, assignment.table_order())?;
        if let Some(bad) = table.values.iter().find(|v| !kind.accepts(v)) {
            return Err(Error::TypeMismatch(format!("value `{bad}` in a {kind:?} column")));
        }
        let codes = CodeAssignment::for_table(assignment, &table)?;
        Ok((Self::from_parts(kind, table, codes)?, rows))
    }

    pub fn from_parts(kind: ColumnKind, table: FrequencyTable, assignment: CodeAssignment) -> Result<Self> {
        if table.len() != assignment.len() {
            return Err(Error::LengthMismatch { expected: table.len(), actual: assignment.len() });
        }
        let mut by_padded = HashMap::with_capacity(table.len());
        for i in 0..assignment.len() {
            if by_padded.insert(assignment.padded(i), i as u32).is_some() {
                return Err(Error::Format(format!("padded code {:#x} assigned twice", assignment.padded(i))));
            }
        }
        let by_value = table.values.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect();
        Ok(Self { kind, table, assignment, by_padded, by_value })
    }

    pub fn kind(&self) -> ColumnKind {
        self.kind
    }

    pub fn table(&self) -> &FrequencyTable {
        &self.table
    }

    pub fn assignment(&self) -> &CodeAssignment {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn position_of(&self, v: &Value) -> Option<usize> {
        self.by_value.get(v).map(|&i| i as usize)
    }

    pub fn value(&self, position: usize) -> &Value {
        &self.table.values[position]
    }

    /// `(codes, lengths)` for a sequence of table positions.
    pub fn row_codes(&self, rows: &[u32]) -> (Vec<u64>, Vec<u8>) {
        rows.iter()
            .map(|&r| (self.assignment.codes[r as usize], self.assignment.lengths[r as usize]))
            .unzip()
    }

    /// Decodes a zero-padded code.
    pub fn decode(&self, padded: u64) -> Result<&Value> {
        self.by_padded
            .get(&padded)
            .map(|&i| &self.table.values[i as usize])
            .ok_or(Error::UnknownCode(padded))
    }

    pub fn decode_position(&self, padded: u64) -> Result<usize> {
        self.by_padded.get(&padded).map(|&i| i as usize).ok_or(Error::UnknownCode(padded))
    }

    /// Resolves a value predicate into code space.
    ///
    /// Absent range literals resolve to the nearest dictionary value (floor
    /// for upper bounds, ceiling for lower bounds); predicates that then hold
    /// for every or for no dictionary value collapse to constants.
    pub fn encode_literal(&self, predicate: &Predicate) -> Result<CodePredicate> {
        for lit in predicate.literals() {
            if !self.kind.accepts(lit) {
                return Err(Error::TypeMismatch(format!("literal `{lit}` against a {:?} column", self.kind)));
            }
        }
        if !self.kind.is_ordered() && predicate.is_range() {
            return Err(Error::UnsupportedPredicate(format!(
                "range predicate `{predicate}` on a categorical column"
            )));
        }
        let n = self.len();
        let lit = |i: usize| self.assignment.literal(i);
        let resolved = match predicate {
            Predicate::Cmp(CmpOp::Eq, v) => match self.position_of(v) {
                Some(_) if n == 1 => CodePredicate::Const(true),
                Some(i) => CodePredicate::Cmp(CmpOp::Eq, lit(i)),
                None => CodePredicate::Const(false),
            },
            Predicate::Cmp(CmpOp::Ne, v) => match self.position_of(v) {
                Some(_) if n == 1 => CodePredicate::Const(false),
                Some(i) => CodePredicate::Cmp(CmpOp::Ne, lit(i)),
                None => CodePredicate::Const(true),
            },
            Predicate::Cmp(op, v) => match self.search(v) {
                Ok(i) => match op {
                    CmpOp::Lt if i == 0 => CodePredicate::Const(false),
                    CmpOp::Gt if i == n - 1 => CodePredicate::Const(false),
                    CmpOp::Le if i == n - 1 => CodePredicate::Const(true),
                    CmpOp::Ge if i == 0 => CodePredicate::Const(true),
                    _ => CodePredicate::Cmp(*op, lit(i)),
                },
                Err(ins) => match op {
                    CmpOp::Lt | CmpOp::Le => self.at_most(ins, n),
                    _ => self.at_least(ins, n),
                },
            },
            Predicate::Between(lo, hi) => {
                let first = match self.search(lo) {
                    Ok(i) => i,
                    Err(ins) => ins,
                };
                let last = match self.search(hi) {
                    Ok(i) => Some(i),
                    Err(0) => None,
                    Err(ins) => Some(ins - 1),
                };
                match last {
                    None => CodePredicate::Const(false),
                    Some(last) if first > last || first >= n => CodePredicate::Const(false),
                    Some(last) if first == 0 && last == n - 1 => CodePredicate::Const(true),
                    Some(last) if first == 0 => CodePredicate::Cmp(CmpOp::Le, lit(last)),
                    Some(last) if last == n - 1 => CodePredicate::Cmp(CmpOp::Ge, lit(first)),
                    Some(last) if first == last => CodePredicate::Cmp(CmpOp::Eq, lit(first)),
                    Some(last) => CodePredicate::Between(lit(first), lit(last)),
                }
            }
        };
        Ok(resolved)
    }

    /// Binary search in an ascending table.
    fn search(&self, v: &Value) -> std::result::Result<usize, usize> {
        debug_assert_eq!(self.table.order, TableOrder::AscendingValue);
        self.table.values.binary_search(v)
    }

    /// `code <= code(floor)` where `floor = ins - 1`.
    fn at_most(&self, ins: usize, n: usize) -> CodePredicate {
        match ins {
            0 => CodePredicate::Const(false),
            i if i >= n => CodePredicate::Const(true),
            i => CodePredicate::Cmp(CmpOp::Le, self.assignment.literal(i - 1)),
        }
    }

    /// `code >= code(ceil)` where `ceil = ins`.
    fn at_least(&self, ins: usize, n: usize) -> CodePredicate {
        match ins {
            0 => CodePredicate::Const(true),
            i if i >= n => CodePredicate::Const(false),
            i => CodePredicate::Cmp(CmpOp::Ge, self.assignment.literal(i)),
        }
    }

    /// `{kind: u8, assignment: u8, n: u64}`, the values (i64 LE, or
    /// length-prefixed UTF-8), then weights and codes as u64 LE and lengths
    /// as u8.
    pub fn write_to(&self, out: &mut Vec<u8>) {
        put_u8(out, kind_tag(self.kind));
        put_u8(out, self.assignment.kind.tag());
        put_u64(out, self.len() as u64);
        for v in &self.table.values {
            match v {
                Value::Int(i) => out.extend_from_slice(&i.to_le_bytes()),
                Value::Str(s) => put_bytes(out, s.as_bytes()),
            }
        }
        for &w in &self.table.weights {
            put_u64(out, w);
        }
        for &c in &self.assignment.codes {
            put_u64(out, c);
        }
        out.extend_from_slice(&self.assignment.lengths);
    }

    pub(crate) fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let kind = kind_from_tag(r.u8()?)?;
        let assignment = AssignmentKind::from_tag(r.u8()?)?;
        let n = r.len_u64()?;
        if n == 0 {
            return Err(Error::Format("empty dictionary".into()));
        }
        let mut values = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            values.push(match kind {
                ColumnKind::Numeric => Value::Int(r.u64()? as i64),
                _ => Value::Str(
                    String::from_utf8(r.bytes()?.to_vec())
                        .map_err(|_| Error::Format("dictionary string is not UTF-8".into()))?,
                ),
            });
        }
        let weights = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let codes = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let lengths = r.take(n)?.to_vec();
        let order = assignment.table_order();
        let sorted = match order {
            TableOrder::AscendingValue => values.windows(2).all(|w| w[0] < w[1]),
            TableOrder::DescendingWeight => weights.windows(2).all(|w| w[0] >= w[1]),
        };
        if !sorted {
            return Err(Error::Format("dictionary table out of order".into()));
        }
        let table = FrequencyTable { values, weights, order };
        Self::from_parts(kind, table, CodeAssignment::from_parts(assignment, codes, lengths)?)
    }
}

fn kind_tag(kind: ColumnKind) -> u8 {
    match kind {
        ColumnKind::Numeric => 0,
        ColumnKind::Categorical => 1,
        ColumnKind::SemiCategoricalString => 2,
    }
}

fn kind_from_tag(tag: u8) -> Result<ColumnKind> {
    Ok(match tag {
        0 => ColumnKind::Numeric,
        1 => ColumnKind::Categorical,
        2 => ColumnKind::SemiCategoricalString,
        t => return Err(Error::Format(format!("unknown column kind {t}"))),
    })
}
