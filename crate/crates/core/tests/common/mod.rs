#![allow(dead_code)]

use bytestore::datagen::{gen_zipf, ZipfSpec};
use bytestore::{CmpOp, EncodedColumn, LaneConfig, LayoutKind, Predicate, ResultBitVector, Value};
use rand::Rng;

pub const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

/// Row-at-a-time filter over the original values.
pub fn naive<T: Clone + Into<Value>>(rows: &[T], p: &Predicate) -> ResultBitVector {
    let bits: Vec<bool> = rows.iter().map(|v| p.matches(&v.clone().into())).collect();
    ResultBitVector::from_bools(&bits)
}

/// A literal that is sometimes present in `rows`, sometimes absent, sometimes out of range.
pub fn int_literal(rng: &mut impl Rng, rows: &[i64], domain: i64) -> i64 {
    match rng.random_range(0..4) {
        0 => rows[rng.random_range(0..rows.len())],
        1 => rng.random_range(-2..domain + 2),
        _ => rng.random_range(0..domain),
    }
}

/// One of the seven operators; index 6 is BETWEEN.
pub fn random_predicate(rng: &mut impl Rng, op_index: usize, rows: &[i64], domain: i64) -> Predicate {
    if op_index == 6 {
        let a = int_literal(rng, rows, domain);
        let b = int_literal(rng, rows, domain);
        Predicate::between(a.min(b), a.max(b)).unwrap()
    } else {
        Predicate::cmp(OPS[op_index], int_literal(rng, rows, domain))
    }
}

/// Uniform (`skew == 0`) or Zipf data over `2^d` values.
pub fn dataset(skew: f64, d: u32, n: usize, seed: u64) -> Vec<i64> {
    gen_zipf(&ZipfSpec::new(skew, d, n, seed).shuffled()).unwrap()
}

pub fn all_layouts(rows: &[i64], lanes: LaneConfig) -> Vec<EncodedColumn> {
    LayoutKind::ALL
        .iter()
        .map(|&k| EncodedColumn::build(rows, bytestore::ColumnKind::Numeric, k, lanes).unwrap())
        .collect()
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}
