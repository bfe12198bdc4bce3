//! Synthetic scan and lookup sweeps over skew, domain size and selectivity.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::advisor::select_literals;
use crate::bitvec::ResultBitVector;
use crate::column::EncodedColumn;
use crate::datagen::{gen_zipf, ValueOrder, ZipfSpec};
use crate::dict::{FrequencyTable, TableOrder};
use crate::error::{Error, Result};
use crate::layout::{LayoutKind, ScanOptions};
use crate::predicate::{CmpOp, ColumnKind, LaneConfig, Predicate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub layouts: Vec<LayoutKind>,
    pub skews: Vec<f64>,
    pub domain_bits: Vec<u32>,
    /// Target selectivities of `LT` predicates. Empty means one averaged
    /// cell per column over `literals` quantile literals.
    pub selectivities: Vec<f64>,
    pub literals: usize,
    pub n_rows: usize,
    pub seed: u64,
    pub order: ValueOrder,
    pub repetitions: usize,
    pub threads: usize,
    pub lanes: LaneConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            layouts: vec![LayoutKind::BitPacked, LayoutKind::Vbp, LayoutKind::PeVbp, LayoutKind::ByteSlice, LayoutKind::PpVbs],
            skews: (0..=8).map(|i| i as f64 * 0.25).collect(),
            domain_bits: vec![12],
            selectivities: Vec::new(),
            literals: 100,
            n_rows: 1_000_000,
            seed: 42,
            order: ValueOrder::Shuffled,
            repetitions: 5,
            threads: 1,
            lanes: LaneConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layouts.is_empty() || self.skews.is_empty() || self.domain_bits.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one layout, skew and domain size".into()));
        }
        if self.n_rows == 0 || self.repetitions == 0 || self.threads == 0 {
            return Err(Error::InvalidConfig("rows, repetitions and threads must be positive".into()));
        }
        if self.selectivities.is_empty() && self.literals == 0 {
            return Err(Error::InvalidConfig("averaged cells need at least one literal".into()));
        }
        if let Some(s) = self.selectivities.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidConfig(format!("selectivity {s} outside [0, 1]")));
        }
        for &d in &self.domain_bits {
            ZipfSpec::new(0.0, d, 1, 0).validate()?;
        }
        for &s in &self.skews {
            ZipfSpec::new(s, 4, 1, 0).validate()?;
        }
        Ok(())
    }
}

/// One sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub layout: LayoutKind,
    pub skew: f64,
    pub domain_bits: u32,
    pub n_rows: usize,
    /// Requested selectivity; `None` for averaged cells.
    pub target_selectivity: Option<f64>,
    /// Mean fraction of rows actually selected.
    pub selectivity: f64,
    pub scan_ns_per_code: f64,
    /// `None` when no row was selected.
    pub lookup_ns_per_code: Option<f64>,
    pub lookup_accesses_per_code: Option<f64>,
    pub scan_bytes_per_code: f64,
    pub bits_per_code: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// `LT` literal whose selectivity is closest to `target` from below.
fn literal_for(table: &FrequencyTable, target: f64) -> (Predicate, f64) {
    let total = table.total_weight();
    let mut idx: Vec<usize> = (0..table.len()).collect();
    idx.sort_by(|&a, &b| table.values[a].cmp(&table.values[b]));
    let goal = (target * total as f64).round() as u64;
    let mut below = 0u64;
    for &i in &idx {
        if below + table.weights[i] > goal {
            return (Predicate::Cmp(CmpOp::Lt, table.values[i].clone()), below as f64 / total as f64);
        }
        below += table.weights[i];
    }
    // Every value qualifies: LE on the maximum.
    let last = idx.last().copied().expect("non-empty table");
    (Predicate::Cmp(CmpOp::Le, table.values[last].clone()), 1.0)
}

struct Measured {
    scan_ns: f64,
    scan_bytes: u64,
    selected: usize,
    lookup_ns: f64,
    lookup_accesses: u64,
}

fn measure_one(col: &EncodedColumn, pred: &Predicate, reps: usize, opts: ScanOptions, buf: &mut Vec<u64>) -> Result<Measured> {
    let code = col.resolve(pred)?;
    let layout = col.layout();
    let (hits, stats) = layout.scan(&code, None, opts)?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        std::hint::black_box(layout.scan(&code, None, opts)?);
        times.push(t.elapsed().as_nanos() as f64);
    }
    let selected = hits.count_ones();
    let (lookup_ns, lookup_accesses) = if selected == 0 {
        (0.0, 0)
    } else {
        buf.clear();
        let lstats = layout.lookup_into(&hits, buf)?;
        let mut lt = Vec::with_capacity(reps);
        for _ in 0..reps {
            buf.clear();
            let t = Instant::now();
            layout.lookup_into(std::hint::black_box(&hits), buf)?;
            lt.push(t.elapsed().as_nanos() as f64);
            std::hint::black_box(&buf);
        }
        (median(lt), lstats.accesses)
    };
    Ok(Measured { scan_ns: median(times), scan_bytes: stats.bytes_loaded, selected, lookup_ns, lookup_accesses })
}

/// Runs every cell, calling `progress` after each one.
pub fn run_sweep(spec: &SweepSpec, mut progress: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    let opts = ScanOptions::threads(spec.threads);
    let mut out = Vec::new();
    // Reused so lookups measure code retrieval rather than page faults.
    let mut buf = Vec::new();
    for &d in &spec.domain_bits {
        for &s in &spec.skews {
            let zipf = ZipfSpec { skew: s, domain_bits: d, n_rows: spec.n_rows, seed: spec.seed, order: spec.order };
            let values = gen_zipf(&zipf)?;
            let table = FrequencyTable::build(&values, TableOrder::AscendingValue)?;
            // (target, predicates with their exact selectivities)
            let cells: Vec<(Option<f64>, Vec<(Predicate, f64)>)> = if spec.selectivities.is_empty() {
                let lits = select_literals(&table, ColumnKind::Numeric, spec.literals);
                vec![(None, lits.into_iter().map(|l| (l.predicate, l.selectivity)).collect())]
            } else {
                spec.selectivities.iter().map(|&t| (Some(t), vec![literal_for(&table, t)])).collect()
            };
            for &layout in &spec.layouts {
                let col = EncodedColumn::build(&values, ColumnKind::Numeric, layout, spec.lanes)?;
                let bits_per_code = col.layout().bits_per_code();
                for (target, preds) in &cells {
                    let (mut scan_ns, mut scan_bytes, mut sel, mut lookup_ns, mut acc, mut looked) =
                        (0.0, 0u64, 0.0, 0.0, 0u64, 0usize);
                    for (p, expected) in preds {
                        let m = measure_one(&col, p, spec.repetitions, opts, &mut buf)?;
                        debug_assert_eq!(m.selected as f64 / spec.n_rows as f64, *expected);
                        scan_ns += m.scan_ns;
                        scan_bytes += m.scan_bytes;
                        sel += m.selected as f64 / spec.n_rows as f64;
                        lookup_ns += m.lookup_ns;
                        acc += m.lookup_accesses;
                        looked += m.selected;
                    }
                    let k = preds.len() as f64;
                    let codes = spec.n_rows as f64 * k;
                    let row = BenchRow {
                        layout,
                        skew: s,
                        domain_bits: d,
                        n_rows: spec.n_rows,
                        target_selectivity: *target,
                        selectivity: sel / k,
                        scan_ns_per_code: scan_ns / codes,
                        lookup_ns_per_code: (looked > 0).then(|| lookup_ns / looked as f64),
                        lookup_accesses_per_code: (looked > 0).then(|| acc as f64 / looked as f64),
                        scan_bytes_per_code: scan_bytes as f64 / codes,
                        bits_per_code,
                    };
                    progress(&row);
                    out.push(row);
                }
            }
        }
    }
    Ok(out)
}

/// Median lookup time per code over a fixed selection.
pub fn lookup_ns_per_code(col: &EncodedColumn, selection: &ResultBitVector, reps: usize) -> Result<f64> {
    let n = selection.count_ones();
    if n == 0 {
        return Err(Error::InvalidConfig("lookup timing needs a non-empty selection".into()));
    }
    let mut buf = Vec::with_capacity(n);
    col.layout().lookup_into(selection, &mut buf)?;
    let mut times = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        buf.clear();
        let t = Instant::now();
        col.layout().lookup_into(std::hint::black_box(selection), &mut buf)?;
        times.push(t.elapsed().as_nanos() as f64);
        std::hint::black_box(&buf);
    }
    Ok(median(times) / n as f64)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_produces_every_cell() {
        let spec = SweepSpec {
            layouts: vec![LayoutKind::ByteSlice, LayoutKind::PpVbs, LayoutKind::PeVbp],
            skews: vec![0.0, 1.5],
            domain_bits: vec![8],
            selectivities: vec![0.0, 0.3, 1.0],
            n_rows: 5000,
            repetitions: 1,
            ..SweepSpec::default()
        };
        let rows = run_sweep(&spec, |_| {}).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 3);
        for r in &rows {
            let t = r.target_selectivity.unwrap();
            assert!(r.selectivity <= t + 1e-9);
            assert_eq!(r.lookup_ns_per_code.is_none(), r.selectivity == 0.0);
            match r.layout {
                LayoutKind::ByteSlice => assert_eq!(r.lookup_accesses_per_code.unwrap_or(1.0), 1.0),
                LayoutKind::PeVbp => assert!(r.lookup_accesses_per_code.unwrap_or(8.0) >= 8.0),
                _ => {}
            }
        }
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("layout,skew,domain_bits,n_rows,target_selectivity,selectivity,"));
        assert_eq!(text.lines().count(), rows.len() + 1);
    }

    #[test]
    fn averaged_cells_and_validation() {
        let spec = SweepSpec { skews: vec![1.0], domain_bits: vec![6], literals: 10, n_rows: 2000, repetitions: 1, ..SweepSpec::default() };
        let rows = run_sweep(&spec, |_| {}).unwrap();
        assert_eq!(rows.len(), spec.layouts.len());
        assert!(rows.iter().all(|r| r.target_selectivity.is_none()));
        assert!(run_sweep(&SweepSpec { selectivities: vec![1.5], ..spec.clone() }, |_| {}).is_err());
        assert!(run_sweep(&SweepSpec { domain_bits: vec![30], ..spec }, |_| {}).is_err());
    }
}
