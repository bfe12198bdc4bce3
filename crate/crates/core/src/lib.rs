//! ByteStore: a main-memory column store with byte-sliced, bit-packed,
//! bit-vertical and variable-byte-slice column layouts.

pub mod bench;
pub mod bits;
pub mod bitvec;
pub mod advisor;
mod codec;
pub mod column;
pub mod datagen;
pub mod dict;
pub mod error;
pub mod layout;
pub mod predicate;
pub mod query;
pub mod store;

pub use bitvec::ResultBitVector;
pub use error::{Error, Result};
pub use predicate::{CmpOp, CodeLiteral, CodePredicate, ColumnKind, LaneConfig, Predicate, Value};
pub use column::EncodedColumn;
pub use layout::{LayoutColumn, LayoutKind, ScanOptions, ScanStats};
