//! Experiment-driven layout choice between ByteSlice and PP-VBS.
//!
//! Both encodings of a column are scanned with the same literals spread
//! over the selectivity range; the layout with the smaller area under the
//! (selectivity, cost) curve wins, ties going to ByteSlice.

use std::hash::Hash;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::column::EncodedColumn;
use crate::dict::FrequencyTable;
use crate::error::{Error, Result};
use crate::layout::{LayoutKind, ScanOptions};
use crate::predicate::{CmpOp, ColumnKind, LaneConfig, Predicate, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSource {
    /// Median wall time of `repetitions` scans after one warm-up, in seconds.
    WallClock,
    /// Bytes loaded by a single scan; fully deterministic.
    ByteLoads,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvisorConfig {
    pub cost: CostSource,
    pub repetitions: usize,
    pub literals: usize,
    /// Profile on at most this many evenly strided rows.
    pub subsample: Option<usize>,
    pub lanes: LaneConfig,
}

impl Default for AdvisorConfig {
    fn default() -> Self {
        Self { cost: CostSource::WallClock, repetitions: 5, literals: 100, subsample: None, lanes: LaneConfig::default() }
    }
}

impl AdvisorConfig {
    pub fn cost_model() -> Self {
        Self { cost: CostSource::ByteLoads, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub selectivity: f64,
    pub cost: f64,
}

/// A profiling literal and the exact fraction of rows it selects.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileLiteral {
    pub predicate: Predicate,
    pub selectivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub chosen: LayoutKind,
    pub auc_byteslice: f64,
    pub auc_ppvbs: f64,
    pub byteslice: Vec<ProfilePoint>,
    pub ppvbs: Vec<ProfilePoint>,
    /// Fewer than two distinct values: ByteSlice without profiling.
    pub degenerate: bool,
}

/// Profiling literals for a column with frequency table `table`.
///
/// Ordered columns get `LT` at the nearest-rank quantiles `k / count`;
/// categorical columns get `EQ` on values at evenly spaced frequency ranks.
pub fn select_literals(table: &FrequencyTable, kind: ColumnKind, count: usize) -> Vec<ProfileLiteral> {
    let total = table.total_weight();
    let n = table.len();
    if n == 0 || count == 0 {
        return Vec::new();
    }
    if kind.is_ordered() {
        let mut sorted: Vec<usize> = (0..n).collect();
        sorted.sort_by(|&a, &b| table.values[a].cmp(&table.values[b]));
        let mut below = Vec::with_capacity(n + 1);
        below.push(0u64);
        for &i in &sorted {
            below.push(below.last().unwrap() + table.weights[i]);
        }
        (1..=count)
            .map(|k| {
                // Value at sorted row index ceil(q * total) - 1.
                let rank = (k as u128 * total as u128).div_ceil(count as u128).max(1) as u64;
                let pos = below.partition_point(|&c| c < rank) - 1;
                ProfileLiteral {
                    predicate: Predicate::Cmp(CmpOp::Lt, table.values[sorted[pos]].clone()),
                    selectivity: below[pos] as f64 / total as f64,
                }
            })
            .collect()
    } else {
        let mut by_weight: Vec<usize> = (0..n).collect();
        by_weight.sort_by_key(|&i| std::cmp::Reverse(table.weights[i]));
        let picks: Vec<usize> = if n <= count {
            by_weight
        } else {
            (0..count).map(|i| by_weight[(i * (n - 1) + (count - 1) / 2) / (count - 1).max(1)]).collect()
        };
        picks
            .into_iter()
            .map(|i| ProfileLiteral {
                predicate: Predicate::Cmp(CmpOp::Eq, table.values[i].clone()),
                selectivity: table.weights[i] as f64 / total as f64,
            })
            .collect()
    }
}

/// Trapezoidal area under `points` after sorting by selectivity.
pub fn auc(points: &[ProfilePoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidConfig(format!("AUC needs at least 2 points, got {}", points.len())));
    }
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.selectivity.total_cmp(&b.selectivity));
    Ok(p.windows(2).map(|w| (w[1].selectivity - w[0].selectivity) * (w[0].cost + w[1].cost) / 2.0).sum())
}

/// Cost of one profiling scan.
pub fn measure(col: &EncodedColumn, predicate: &Predicate, cfg: &AdvisorConfig) -> Result<f64> {
    let opts = ScanOptions::default();
    match cfg.cost {
        CostSource::ByteLoads => Ok(col.scan(predicate, None, opts)?.1.bytes_loaded as f64),
        CostSource::WallClock => {
            let code = col.resolve(predicate)?;
            std::hint::black_box(col.layout().scan(&code, None, opts)?);
            let mut times = Vec::with_capacity(cfg.repetitions.max(1));
            for _ in 0..cfg.repetitions.max(1) {
                let t = Instant::now();
                std::hint::black_box(col.layout().scan(&code, None, opts)?);
                times.push(t.elapsed().as_secs_f64());
            }
            times.sort_by(f64::total_cmp);
            Ok(times[times.len() / 2])
        }
    }
}

/// Profiles both candidate layouts of `rows` and picks one.
pub fn advise<T>(rows: &[T], kind: ColumnKind, cfg: &AdvisorConfig) -> Result<Advice>
where
    T: Hash + Eq + Clone + Into<Value>,
{
    advise_with(rows, kind, cfg, |col, p| measure(col, p, cfg))
}

/// As [`advise`] with a caller-supplied cost function.
pub fn advise_with<T, F>(rows: &[T], kind: ColumnKind, cfg: &AdvisorConfig, mut cost: F) -> Result<Advice>
where
    T: Hash + Eq + Clone + Into<Value>,
    F: FnMut(&EncodedColumn, &Predicate) -> Result<f64>,
{
    let sampled;
    let rows = match cfg.subsample {
        Some(m) if m > 0 && rows.len() > m => {
            sampled = (0..m).map(|i| rows[i * rows.len() / m].clone()).collect::<Vec<T>>();
            &sampled[..]
        }
        _ => rows,
    };
    let byteslice = EncodedColumn::build(rows, kind, LayoutKind::ByteSlice, cfg.lanes)?;
    let table = byteslice.dictionary().table();
    if table.len() < 2 {
        return Ok(Advice {
            chosen: LayoutKind::ByteSlice,
            auc_byteslice: 0.0,
            auc_ppvbs: 0.0,
            byteslice: Vec::new(),
            ppvbs: Vec::new(),
            degenerate: true,
        });
    }
    let literals = select_literals(table, kind, cfg.literals);
    let ppvbs = EncodedColumn::build(rows, kind, LayoutKind::PpVbs, cfg.lanes)?;
    let mut profile = |col: &EncodedColumn| -> Result<Vec<ProfilePoint>> {
        literals
            .iter()
            .map(|l| Ok(ProfilePoint { selectivity: l.selectivity, cost: cost(col, &l.predicate)? }))
            .collect()
    };
    let bs_points = profile(&byteslice)?;
    let vbs_points = profile(&ppvbs)?;
    let (y, z) = (auc(&bs_points)?, auc(&vbs_points)?);
    Ok(Advice {
        chosen: if y <= z { LayoutKind::ByteSlice } else { LayoutKind::PpVbs },
        auc_byteslice: y,
        auc_ppvbs: z,
        byteslice: bs_points,
        ppvbs: vbs_points,
        degenerate: false,
    })
}
