//! Column values, predicates over them, and predicates resolved to code space.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A raw column value. Columns are homogeneous: numeric columns hold
/// `Int`, categorical and semi-categorical columns hold `Str`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_owned())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    SemiCategoricalString,
}

impl ColumnKind {
    /// Whether codes must preserve value order (range predicates allowed).
    pub fn is_ordered(self) -> bool {
        !matches!(self, ColumnKind::Categorical)
    }

    pub fn parse_value(self, raw: &str) -> std::result::Result<Value, String> {
        match self {
            ColumnKind::Numeric => raw
                .trim()
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|e| format!("`{raw}` is not an integer: {e}")),
            _ => Ok(Value::Str(raw.to_owned())),
        }
    }

    pub fn accepts(self, v: &Value) -> bool {
        matches!(
            (self, v),
            (ColumnKind::Numeric, Value::Int(_)) | (ColumnKind::Categorical | ColumnKind::SemiCategoricalString, Value::Str(_))
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Gt => a > b,
            CmpOp::Le => a <= b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn is_range(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// A predicate over raw column values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    Cmp(CmpOp, Value),
    Between(Value, Value),
}

impl Predicate {
    pub fn cmp(op: CmpOp, literal: impl Into<Value>) -> Self {
        Predicate::Cmp(op, literal.into())
    }

    /// Rejects `lo > hi`.
    pub fn between(lo: impl Into<Value>, hi: impl Into<Value>) -> Result<Self> {
        let (lo, hi) = (lo.into(), hi.into());
        if lo > hi {
            return Err(Error::UnsupportedPredicate(format!("BETWEEN {lo} AND {hi} has lo > hi")));
        }
        Ok(Predicate::Between(lo, hi))
    }

    /// Row-at-a-time evaluation on a raw value.
    pub fn matches(&self, v: &Value) -> bool {
        match self {
            Predicate::Cmp(op, lit) => op.holds(v, lit),
            Predicate::Between(lo, hi) => lo <= v && v <= hi,
        }
    }

    pub fn is_range(&self) -> bool {
        match self {
            Predicate::Cmp(op, _) => op.is_range(),
            Predicate::Between(..) => true,
        }
    }

    pub fn literals(&self) -> Vec<&Value> {
        match self {
            Predicate::Cmp(_, v) => vec![v],
            Predicate::Between(lo, hi) => vec![lo, hi],
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Cmp(op, v) => write!(f, "{} {v}", op.symbol()),
            Predicate::Between(lo, hi) => write!(f, "BETWEEN {lo} AND {hi}"),
        }
    }
}

/// A code together with its length. The length unit depends on the
/// assignment: bytes for fixed-width and prefix-preserving codes, bits for
/// prefix-free codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodeLiteral {
    pub code: u64,
    pub len: u8,
}

/// A predicate resolved against a dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodePredicate {
    Const(bool),
    Cmp(CmpOp, CodeLiteral),
    /// Inclusive range `lo <= code <= hi`.
    Between(CodeLiteral, CodeLiteral),
}

/// Lanes processed per scan word. Block size equals the lane count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaneConfig {
    lanes: usize,
}

impl LaneConfig {
    pub fn new(lanes: usize) -> Result<Self> {
        if !lanes.is_power_of_two() || !(8..=64).contains(&lanes) {
            return Err(Error::InvalidConfig(format!("lane count {lanes} must be a power of two in 8..=64")));
        }
        Ok(Self { lanes })
    }

    pub fn lanes(self) -> usize {
        self.lanes
    }

    pub fn blocks(self, n_rows: usize) -> usize {
        n_rows.div_ceil(self.lanes)
    }
}

impl Default for LaneConfig {
    fn default() -> Self {
        Self { lanes: 32 }
    }
}
