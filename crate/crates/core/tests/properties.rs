mod common;

use bytestore::bits::{cmp_bytes, cmp_bytes_ref, pdep, pdep64, pdep64_ref, pext, pext64, pext64_ref};
use bytestore::datagen::{gen_zipf, ZipfSpec};
use bytestore::dict::{ppe_numerical, prefix_free_encode, AssignmentKind, CodeAssignment, FrequencyTable, TableOrder};
use bytestore::{ColumnKind, EncodedColumn, LaneConfig, LayoutKind, Predicate, ResultBitVector, ScanOptions, Value};
use common::{all_layouts, naive, random_predicate, OPS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn hardware_deposit_and_extract_match_reference(src: u64, mask: u64) {
        prop_assert_eq!(pdep64(src, mask), pdep64_ref(src, mask));
        prop_assert_eq!(pext64(src, mask), pext64_ref(src, mask));
        let (s, m) = (src as u32, mask as u32);
        prop_assert_eq!(pdep(s, m) as u64, pdep64_ref(s as u64, m as u64));
        prop_assert_eq!(pext(s, m) as u64, pext64_ref(s as u64, m as u64));
        // Extract undoes deposit on the mask positions.
        prop_assert_eq!(pext64(pdep64(src, mask), mask), src & bytestore::bits::low_mask(mask.count_ones()));
    }

    #[test]
    fn vector_byte_compare_matches_reference(bytes in prop::collection::vec(any::<u8>(), 64), lit: u8, which in 0usize..4) {
        let len = [8, 16, 32, 64][which];
        prop_assert_eq!(cmp_bytes(&bytes[..len], lit), cmp_bytes_ref(&bytes[..len], lit));
    }

    #[test]
    fn every_lane_count_agrees_with_the_filter(
        skew in prop::sample::select(vec![0.0, 0.5, 1.0, 1.5]),
        d in 4u32..14,
        n in 1usize..3000,
        seed: u64,
        op in 0usize..7,
    ) {
        let rows = common::dataset(skew, d, n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let p = random_predicate(&mut rng, op, &rows, 1 << d);
        let want = naive(&rows, &p);
        for lanes in [8, 16, 32, 64] {
            for col in all_layouts(&rows, LaneConfig::new(lanes).unwrap()) {
                let (got, _) = col.scan(&p, None, ScanOptions::default()).unwrap();
                prop_assert_eq!(&got, &want, "{} lanes={} {:?}", col.layout_kind(), lanes, p);
            }
        }
    }

    #[test]
    fn lookup_of_a_scan_returns_the_filtered_values(
        skew in prop::sample::select(vec![0.0, 1.0, 2.0]),
        d in 4u32..17,
        n in 1usize..5000,
        seed: u64,
        op in 0usize..7,
    ) {
        let rows = common::dataset(skew, d, n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        let p = random_predicate(&mut rng, op, &rows, 1 << d);
        let want: Vec<Value> = rows.iter().filter(|&&v| p.matches(&Value::Int(v))).map(|&v| Value::Int(v)).collect();
        for col in all_layouts(&rows, LaneConfig::default()) {
            let (sel, _) = col.scan(&p, None, ScanOptions::default()).unwrap();
            prop_assert_eq!(&col.lookup_values(&sel).unwrap(), &want, "{}", col.layout_kind());
        }
    }

    #[test]
    fn strings_scan_in_lexicographic_order(
        words in prop::collection::vec("[a-d]{0,4}", 1..400),
        lit in "[a-e]{0,5}",
        op in 0usize..6,
    ) {
        let p = Predicate::cmp(OPS[op], lit.as_str());
        let want = naive(&words, &p);
        for layout in [LayoutKind::ByteSlice, LayoutKind::PpVbs, LayoutKind::PeVbp, LayoutKind::BitPacked] {
            let col = EncodedColumn::build(&words, ColumnKind::SemiCategoricalString, layout, LaneConfig::default()).unwrap();
            prop_assert_eq!(&col.scan(&p, None, ScanOptions::default()).unwrap().0, &want, "{}", layout);
        }
    }

    #[test]
    fn categorical_equality_matches_the_filter(
        words in prop::collection::vec("[a-z]{1,3}", 1..2000),
        pick: prop::sample::Index,
        absent in "[0-9]{1,2}",
        eq: bool,
    ) {
        let lit = if pick.index(4) == 0 { absent } else { words[pick.index(words.len())].clone() };
        let p = Predicate::cmp(if eq { bytestore::CmpOp::Eq } else { bytestore::CmpOp::Ne }, lit.as_str());
        let want = naive(&words, &p);
        for layout in [LayoutKind::ByteSlice, LayoutKind::PpVbs, LayoutKind::Vbp, LayoutKind::BitPacked] {
            let col = EncodedColumn::build(&words, ColumnKind::Categorical, layout, LaneConfig::default()).unwrap();
            prop_assert_eq!(&col.scan(&p, None, ScanOptions::default()).unwrap().0, &want, "{}", layout);
        }
    }

    #[test]
    fn prefix_free_codes_preserve_order(weights in prop::collection::vec(1u64..10_000, 1..3000)) {
        let (codes, lens) = prefix_free_encode(&weights);
        let a = CodeAssignment { kind: AssignmentKind::PrefixFree, max_len: *lens.iter().max().unwrap(), codes, lengths: lens, width: 0 };
        for i in 1..weights.len() {
            prop_assert!(a.padded(i - 1) < a.padded(i), "position {}", i);
        }
    }
}

#[test]
fn byteslice_first_byte_decides_most_uniform_blocks() {
    // Each lane matches the literal's first byte with probability 1/256, so
    // a 32-lane block reaches slice 2 with probability 1 - (255/256)^32.
    let n = 32 * 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rows: Vec<i64> = (0..n).map(|_| rng.random_range(0..4096)).collect();
    let col = EncodedColumn::build(&rows, ColumnKind::Numeric, LayoutKind::ByteSlice, LaneConfig::default()).unwrap();
    let expected = 1.0 - (255.0f64 / 256.0).powi(32);
    for lit in [5, 1000, 2049, 4000] {
        for op in [bytestore::CmpOp::Gt, bytestore::CmpOp::Eq] {
            let (_, stats) = col.scan(&Predicate::cmp(op, lit), None, ScanOptions::default()).unwrap();
            let frac = stats.loads_at(2) as f64 / (n / 32) as f64;
            assert!(frac < 0.2 && (frac - expected).abs() < 0.05, "literal {lit} {op:?}: {frac:.3} vs {expected:.3}");
        }
    }
}

#[test]
fn byte_rounded_prefix_free_codes_are_no_shorter_than_ppe() {
    // Equal granularity: prefix-free lengths rounded up to whole bytes still
    // form a byte-level prefix code, which PPE must not lose to.
    for d in [8, 10, 12, 14, 16] {
        for skew in [0.5, 0.8, 1.0, 1.2, 1.5, 2.0] {
            let rows = gen_zipf(&ZipfSpec::new(skew, d, 200_000, 3 + d as u64).shuffled()).unwrap();
            let table = FrequencyTable::build(&rows, TableOrder::AscendingValue).unwrap();
            let total: u64 = table.weights.iter().sum();
            let avg = |lens: &[u8], unit: u32, round: bool| {
                let bits = |l: u8| {
                    let b = l as u32 * unit;
                    if round { b.div_ceil(8) * 8 } else { b }
                };
                table.weights.iter().zip(lens).map(|(&w, &l)| (w * bits(l) as u64) as f64).sum::<f64>() / total as f64
            };
            let (_, ppe) = ppe_numerical(&table.weights);
            let (_, pf) = prefix_free_encode(&table.weights);
            let (ppe_bits, pf_bytes) = (avg(&ppe, 8, false), avg(&pf, 1, true));
            assert!(pf_bytes >= ppe_bits - 1e-9, "d={d} s={skew}: prefix-free {pf_bytes:.3} < PPE {ppe_bits:.3}");
        }
    }
}

#[test]
fn constant_predicates_load_nothing() {
    let rows: Vec<i64> = (0..5000).map(|i| (i * 7) % 300 + 10).collect();
    let cases = [
        (Predicate::cmp(bytestore::CmpOp::Eq, 5), false),
        (Predicate::cmp(bytestore::CmpOp::Lt, 3), false),
        (Predicate::cmp(bytestore::CmpOp::Gt, 400), false),
        (Predicate::cmp(bytestore::CmpOp::Ne, 5), true),
        (Predicate::cmp(bytestore::CmpOp::Ge, 0), true),
    ];
    for col in all_layouts(&rows, LaneConfig::default()) {
        for (p, all) in &cases {
            let (got, stats) = col.scan(p, None, ScanOptions::default()).unwrap();
            let want = if *all { ResultBitVector::ones(rows.len()) } else { ResultBitVector::zeros(rows.len()) };
            assert_eq!(got, want, "{} {p:?}", col.layout_kind());
            assert_eq!(stats.bytes_loaded, 0, "{} {p:?}", col.layout_kind());
        }
    }
}
