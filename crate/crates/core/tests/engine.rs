use bytestore::advisor::AdvisorConfig;
use bytestore::datagen::{gen_zipf, ZipfSpec};
use bytestore::query::{execute, CondOp, Condition, Query};
use bytestore::store::{ColumnSpec, IngestOptions, Schema, Store};
use bytestore::{CmpOp, ColumnKind, Error, LayoutKind, Predicate, ScanOptions, Value};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

struct Table {
    schema: Schema,
    header: Vec<String>,
    /// Cell text, row-major.
    cells: Vec<Vec<String>>,
}

impl Table {
    fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.cells {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

fn random_cell(rng: &mut ChaCha8Rng, kind: ColumnKind, spread: u32) -> String {
    match kind {
        ColumnKind::Numeric => rng.random_range(-(spread as i64)..spread as i64 * 3).to_string(),
        // Skewed short strings so some values repeat often.
        _ => {
            let len = rng.random_range(1..4);
            (0..len).map(|_| (b'a' + rng.random_range(0..spread.min(26)) as u8 / (1 + rng.random_range(0..3))) as char).collect()
        }
    }
}

fn random_table(rng: &mut ChaCha8Rng) -> Table {
    let kinds = [ColumnKind::Numeric, ColumnKind::Categorical, ColumnKind::SemiCategoricalString];
    let width = rng.random_range(1..5);
    let n = rng.random_range(1..1500);
    let mut specs = Vec::new();
    let mut spreads = Vec::new();
    for i in 0..width {
        specs.push(ColumnSpec::new(format!("c{i}"), *kinds.choose(rng).unwrap()));
        spreads.push(*[2u32, 20, 300, 100_000].choose(rng).unwrap());
    }
    let cells = (0..n)
        .map(|_| specs.iter().zip(&spreads).map(|(s, &sp)| random_cell(rng, s.kind, sp)).collect())
        .collect();
    let header = specs.iter().map(|s| s.name.clone()).collect();
    Table { schema: Schema::new(specs).unwrap(), header, cells }
}

fn random_condition(rng: &mut ChaCha8Rng, table: &Table) -> Condition {
    let c = rng.random_range(0..table.header.len());
    let spec = &table.schema.columns[c];
    let literal = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.6) {
            table.cells[rng.random_range(0..table.cells.len())][c].clone()
        } else {
            random_cell(rng, spec.kind, 300)
        }
    };
    match spec.kind {
        ColumnKind::Categorical => {
            let op = if rng.random_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
            Condition::new(&spec.name, op, literal(rng))
        }
        _ if rng.random_bool(0.15) => {
            let (a, b) = (literal(rng), literal(rng));
            let (va, vb) = (spec.kind.parse_value(&a).unwrap(), spec.kind.parse_value(&b).unwrap());
            if va <= vb { Condition::between(&spec.name, a, b) } else { Condition::between(&spec.name, b, a) }
        }
        _ => Condition::new(&spec.name, OPS[rng.random_range(0..6)], literal(rng)),
    }
}

/// Row-at-a-time evaluation over the cell text.
fn naive_execute(table: &Table, query: &Query) -> Vec<Vec<Value>> {
    let value = |r: usize, name: &str| {
        let c = table.schema.index_of(name).unwrap();
        table.schema.columns[c].kind.parse_value(&table.cells[r][c]).unwrap()
    };
    let holds = |r: usize, cond: &Condition| {
        let kind = table.schema.columns[table.schema.index_of(&cond.column).unwrap()].kind;
        let lits: Vec<Value> = cond.literals.iter().map(|l| kind.parse_value(l).unwrap()).collect();
        let p = match cond.op {
            CondOp::Cmp(op) => Predicate::cmp(op, lits[0].clone()),
            CondOp::Between => Predicate::between(lits[0].clone(), lits[1].clone()).unwrap(),
        };
        p.matches(&value(r, &cond.column))
    };
    (0..table.cells.len())
        .filter(|&r| query.disjuncts.is_empty() || query.disjuncts.iter().any(|conj| conj.iter().all(|c| holds(r, c))))
        .map(|r| query.projection.iter().map(|name| value(r, name)).collect())
        .collect()
}

fn forced(table: &Table, layout: LayoutKind) -> IngestOptions {
    let mut opts = IngestOptions::forced(layout);
    if layout == LayoutKind::PeVbp && table.schema.columns.iter().any(|c| c.kind == ColumnKind::Categorical) {
        // Unordered codes need a layout without order-dependent scans.
        opts = IngestOptions::forced(LayoutKind::Vbp);
    }
    opts
}

#[test]
fn random_queries_match_a_row_at_a_time_evaluator() {
    let mut runner = TestRunner::new(Config { cases: 60, failure_persistence: None, ..Config::default() });
    runner
        .run(&any::<u64>(), |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = random_table(&mut rng);
            let csv = table.csv();
            let advised = IngestOptions::advisor(AdvisorConfig { literals: 8, ..AdvisorConfig::cost_model() });
            let stores: Vec<Store> = [advised, forced(&table, LayoutKind::PpVbs), forced(&table, LayoutKind::BitPacked)]
                .iter()
                .map(|o| Store::ingest_reader(csv.as_bytes(), &table.schema, o).unwrap().0)
                .collect();
            for _ in 0..5 {
                let disjuncts = (0..rng.random_range(0..3))
                    .map(|_| (0..rng.random_range(1..4)).map(|_| random_condition(&mut rng, &table)).collect())
                    .collect();
                let projection = table.header.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
                let query = Query::new(disjuncts, projection);
                let want = naive_execute(&table, &query);
                for store in &stores {
                    let threads = rng.random_range(1..4);
                    let got = execute(store, &query, ScanOptions::threads(threads)).unwrap();
                    prop_assert_eq!(&got.rows, &want, "{:?}", query);
                }
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn every_forced_layout_gives_the_same_answer() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 20_000;
    let a = gen_zipf(&ZipfSpec::new(1.1, 10, n, 1).shuffled()).unwrap();
    let b = gen_zipf(&ZipfSpec::new(0.0, 14, n, 2)).unwrap();
    let words = ["north", "south", "east", "west", "up", "down"];
    let mut csv = String::from("a,b,dir\n");
    for i in 0..n {
        csv.push_str(&format!("{},{},{}\n", a[i], b[i], words[(a[i] % 6) as usize]));
    }
    let schema = Schema::new(vec![
        ColumnSpec::new("a", ColumnKind::Numeric),
        ColumnSpec::new("b", ColumnKind::Numeric),
        ColumnSpec::new("dir", ColumnKind::Categorical),
    ])
    .unwrap();
    let queries: Vec<Query> = (0..20)
        .map(|_| {
            let lit = a[rng.random_range(0..n)];
            let text = format!(
                "a < {lit} AND b >= {} AND dir != {} OR a BETWEEN {} AND {}",
                rng.random_range(0..16384),
                words[rng.random_range(0..6)],
                lit,
                lit + 50
            );
            Query::parse(&text, &["dir", "b", "a"]).unwrap()
        })
        .collect();
    let mut reference: Option<Vec<Vec<Vec<Value>>>> = None;
    for layout in LayoutKind::ALL {
        let mut s = schema.clone();
        if layout == LayoutKind::PeVbp {
            s.columns[2].layout = Some(LayoutKind::ByteSlice);
        }
        let (store, report) = Store::ingest_reader(csv.as_bytes(), &s, &IngestOptions::forced(layout)).unwrap();
        assert_eq!(report.columns[0].layout, layout);
        let answers: Vec<_> = queries.iter().map(|q| execute(&store, q, ScanOptions::default()).unwrap().rows).collect();
        match &reference {
            None => reference = Some(answers),
            Some(r) => assert_eq!(r, &answers, "{layout}"),
        }
    }
}

#[test]
fn persisted_store_reopens_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.byst");
    let mut csv = String::from("k,name\n");
    for i in 0..3000u64 {
        csv.push_str(&format!("{},\"n,{}\"\n", (i * i) % 977, i % 41));
    }
    let schema = Schema::new(vec![
        ColumnSpec::new("k", ColumnKind::Numeric),
        ColumnSpec::new("name", ColumnKind::SemiCategoricalString),
    ])
    .unwrap();
    let (store, _) = Store::ingest_reader(csv.as_bytes(), &schema, &IngestOptions::advisor(AdvisorConfig::cost_model())).unwrap();
    store.save(&path).unwrap();
    let reopened = Store::open(&path).unwrap();
    assert_eq!(reopened.to_bytes(), store.to_bytes());
    assert_eq!(reopened.manifest(), store.manifest());
    let q = Query::parse("name >= 'n,30' AND k < 500", &["name", "k"]).unwrap();
    let a = execute(&store, &q, ScanOptions::default()).unwrap();
    let b = execute(&reopened, &q, ScanOptions::default()).unwrap();
    assert_eq!(a.rows, b.rows);
    assert!(!a.rows.is_empty());
}

#[test]
fn equality_on_a_four_row_column() {
    let schema = Schema::new(vec![ColumnSpec::new("v", ColumnKind::Numeric).with_layout(LayoutKind::PpVbs)]).unwrap();
    let csv = "v\n129\n192\n30633\n33161\n";
    let (store, _) = Store::ingest_reader(csv.as_bytes(), &schema, &IngestOptions::forced(LayoutKind::PpVbs)).unwrap();
    let r = execute(&store, &Query::parse("v = 192", &["v"]).unwrap(), ScanOptions::default()).unwrap();
    assert_eq!(r.selection.iter_ones().collect::<Vec<_>>(), vec![1]);
    assert_eq!(r.rows, vec![vec![Value::Int(192)]]);
}

#[test]
fn constant_false_filter_skips_lookup() {
    let schema = Schema::new(vec![ColumnSpec::new("v", ColumnKind::Numeric), ColumnSpec::new("c", ColumnKind::Categorical)]).unwrap();
    let csv = "v,c\n1,x\n5,y\n9,x\n";
    for layout in [LayoutKind::ByteSlice, LayoutKind::PpVbs] {
        let (store, _) = Store::ingest_reader(csv.as_bytes(), &schema, &IngestOptions::forced(layout)).unwrap();
        for filter in ["v = 4", "v > 100", "c = z"] {
            let r = execute(&store, &Query::parse(filter, &["v", "c"]).unwrap(), ScanOptions::default()).unwrap();
            assert!(r.rows.is_empty(), "{filter}");
            assert_eq!(r.lookup_secs(), 0.0);
            assert!(r.timings.iter().all(|t| t.bytes_loaded == 0), "{filter}: {:?}", r.timings);
        }
    }
}

#[test]
fn advisor_splits_uniform_and_skewed_columns() {
    let n = 200_000;
    let uniform = gen_zipf(&ZipfSpec::new(0.0, 12, n, 31)).unwrap();
    let skewed = gen_zipf(&ZipfSpec::new(1.5, 12, n, 32).shuffled()).unwrap();
    let mut csv = String::from("u,z\n");
    for i in 0..n {
        csv.push_str(&format!("{},{}\n", uniform[i], skewed[i]));
    }
    let schema = Schema::new(vec![ColumnSpec::new("u", ColumnKind::Numeric), ColumnSpec::new("z", ColumnKind::Numeric)]).unwrap();
    let (store, report) = Store::ingest_reader(csv.as_bytes(), &schema, &IngestOptions::advisor(AdvisorConfig::cost_model())).unwrap();
    assert_eq!(report.split(), (1, 1));
    assert_eq!(store.column("u").unwrap().layout_kind(), LayoutKind::ByteSlice);
    assert_eq!(store.column("z").unwrap().layout_kind(), LayoutKind::PpVbs);
    let advice = store.manifest().columns[1].advice.as_ref().unwrap();
    assert!(advice.auc_ppvbs < advice.auc_byteslice);
}

#[test]
fn ingestion_rejects_bad_input() {
    let schema = Schema::new(vec![ColumnSpec::new("v", ColumnKind::Numeric)]).unwrap();
    let opts = IngestOptions::forced(LayoutKind::ByteSlice);
    assert!(Store::ingest_reader("".as_bytes(), &schema, &opts).is_err());
    assert!(Store::ingest_reader("v\n".as_bytes(), &schema, &opts).is_err());
    assert!(Store::ingest_reader("w\n1\n".as_bytes(), &schema, &opts).is_err());
    let err = Store::ingest_reader("v\n1\n\n2\nx\n".as_bytes(), &schema, &opts).unwrap_err();
    assert!(err.is_data_error(), "{err}");
    assert!(matches!(
        execute(
            &Store::ingest_reader("v\n1\n".as_bytes(), &schema, &opts).unwrap().0,
            &Query::parse("v = 1", &["nope"]).unwrap(),
            ScanOptions::default()
        ),
        Err(Error::UnknownColumn(_))
    ));
}
