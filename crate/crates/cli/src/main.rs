use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bytestore::advisor::{advise, AdvisorConfig, CostSource};
use bytestore::bench::{self, SweepSpec};
use bytestore::datagen::{gen_zipf, ValueOrder, ZipfSpec};
use bytestore::query::{execute, Query};
use bytestore::store::{read_csv, ColumnSpec, IngestOptions, LayoutPolicy, RawColumn, Schema, Store};
use bytestore::{ColumnKind, LaneConfig, LayoutColumn, LayoutKind, ScanOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

/// Column store with byte-sliced and variable byte slice layouts.
#[derive(Parser)]
#[command(name = "bytestore", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a CSV file into a store file.
    Ingest(IngestArgs),
    /// Profile each column and print the layout advice as CSV.
    Advise(AdviseArgs),
    /// Run a filter and projection against a store; rows go to stdout as CSV.
    Query(QueryArgs),
    /// Run a synthetic scan/lookup sweep and write the results as CSV.
    Bench(BenchArgs),
    /// Generate a synthetic Zipf column as CSV.
    Gen(GenArgs),
    /// Print a store's manifest and per-column sizes.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SchemaArgs {
    /// TOML schema file with a `[[columns]]` table per column.
    #[arg(long, conflicts_with = "column")]
    schema: Option<PathBuf>,
    /// Inline column spec `name:kind[:layout]`; repeatable.
    /// Kinds: numeric, categorical, semi_categorical_string.
    #[arg(long = "column", short = 'c', value_name = "SPEC")]
    column: Vec<String>,
}

#[derive(Args)]
struct AdvisorArgs {
    /// Rank layouts by bytes loaded instead of wall time (deterministic).
    #[arg(long)]
    cost_model: bool,
    /// Profile on at most this many evenly strided rows.
    #[arg(long, value_name = "ROWS")]
    subsample: Option<usize>,
    /// Profiling literals per column.
    #[arg(long, default_value_t = 100)]
    literals: usize,
    /// Timed repetitions per literal.
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
}

impl AdvisorArgs {
    fn config(&self, lanes: LaneConfig) -> AdvisorConfig {
        AdvisorConfig {
            cost: if self.cost_model { CostSource::ByteLoads } else { CostSource::WallClock },
            repetitions: self.repetitions,
            literals: self.literals,
            subsample: self.subsample,
            lanes,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Input CSV with a header row.
    input: PathBuf,
    /// Store file to write.
    #[arg(long, short)]
    output: PathBuf,
    #[command(flatten)]
    schema: SchemaArgs,
    /// Force one layout for every column without a per-column layout
    /// (bit_packed, byte_slice, vbp, pe_vbp, pp_vbs). Default: advisor.
    #[arg(long)]
    layout: Option<String>,
    #[command(flatten)]
    advisor: AdvisorArgs,
    /// Codes per SIMD block: 8, 16, 32 or 64.
    #[arg(long, default_value_t = 32)]
    lanes: usize,
    /// Seed recorded in the manifest for generated data.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AdviseArgs {
    input: PathBuf,
    #[command(flatten)]
    schema: SchemaArgs,
    #[command(flatten)]
    advisor: AdvisorArgs,
    #[arg(long, default_value_t = 32)]
    lanes: usize,
    /// Emit every profile point (column, layout, selectivity, cost) instead of the summary.
    #[arg(long)]
    points: bool,
}

#[derive(Args)]
struct QueryArgs {
    store: PathBuf,
    /// Filter such as `a < 10 AND b = 'x' OR c BETWEEN 1 AND 5`. Empty selects every row.
    #[arg(long = "where", short = 'w', default_value = "")]
    filter: String,
    /// Comma-separated projection; defaults to every column.
    #[arg(long, short, value_delimiter = ',')]
    select: Vec<String>,
    /// Scan threads; blocks are split evenly.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Print only the row count instead of the rows.
    #[arg(long)]
    count: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Output CSV; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "bit_packed,vbp,pe_vbp,byte_slice,pp_vbs")]
    layouts: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2")]
    skews: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "12")]
    domain_bits: Vec<u32>,
    /// Target selectivities of `<` predicates; when absent each cell
    /// averages over `--literals` quantile literals.
    #[arg(long, value_delimiter = ',')]
    selectivities: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    literals: usize,
    #[arg(long, default_value_t = 1_000_000)]
    rows: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 32)]
    lanes: usize,
    /// Map frequency rank k to value k-1 instead of a seeded permutation.
    #[arg(long)]
    rank_order: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1.0)]
    skew: f64,
    #[arg(long, default_value_t = 12)]
    domain_bits: u32,
    #[arg(long, default_value_t = 1_000_000)]
    rows: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Assign ranks to values through a seeded permutation.
    #[arg(long)]
    shuffle: bool,
    /// Header of the generated column.
    #[arg(long, default_value = "value")]
    name: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    store: PathBuf,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let data = error.chain().any(|e| {
            e.downcast_ref::<bytestore::Error>().is_some_and(|e| e.is_data_error()) || e.downcast_ref::<io::Error>().is_some()
        });
        Self { code: if data { EXIT_DATA } else { EXIT_USAGE }, error }
    }
}

impl From<bytestore::Error> for Failure {
    fn from(e: bytestore::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Advise(a) => advise_cmd(a),
        Command::Query(a) => query(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Gen(a) => gen(a),
        Command::Inspect(a) => inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn lanes(n: usize) -> Result<LaneConfig, Failure> {
    LaneConfig::new(n).map_err(|e| usage(e.into()))
}

fn parse_kind(s: &str) -> anyhow::Result<ColumnKind> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "numeric" | "int" => Ok(ColumnKind::Numeric),
        "categorical" | "cat" => Ok(ColumnKind::Categorical),
        "semi_categorical_string" | "semi" | "string" => Ok(ColumnKind::SemiCategoricalString),
        _ => bail!("unknown column kind `{s}`"),
    }
}

fn parse_column_spec(spec: &str) -> anyhow::Result<ColumnSpec> {
    let parts: Vec<&str> = spec.split(':').collect();
    let (name, kind, layout) = match parts.as_slice() {
        [n, k] => (*n, *k, None),
        [n, k, l] => (*n, *k, Some(*l)),
        _ => bail!("column spec `{spec}` is not `name:kind[:layout]`"),
    };
    let mut col = ColumnSpec::new(name, parse_kind(kind)?);
    if let Some(l) = layout {
        col = col.with_layout(LayoutKind::parse(l)?);
    }
    Ok(col)
}

fn load_schema(args: &SchemaArgs) -> Result<Schema, Failure> {
    let schema = match &args.schema {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading schema {}", path.display())).map_err(usage)?;
            toml::from_str::<Schema>(&text).with_context(|| format!("parsing schema {}", path.display())).map_err(usage)?
        }
        None if args.column.is_empty() => return Err(usage(anyhow!("give a schema with --schema or --column"))),
        None => Schema { columns: args.column.iter().map(|c| parse_column_spec(c)).collect::<anyhow::Result<_>>().map_err(usage)? },
    };
    schema.validate().map_err(|e| usage(e.into()))?;
    Ok(schema)
}

fn open_csv(path: &Path) -> Result<File, Failure> {
    File::open(path).with_context(|| format!("opening {}", path.display())).map_err(Failure::from)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn ingest(a: IngestArgs) -> CmdResult {
    let schema = load_schema(&a.schema)?;
    let lanes = lanes(a.lanes)?;
    let policy = match &a.layout {
        Some(l) => LayoutPolicy::Forced { layout: LayoutKind::parse(l).map_err(|e| usage(e.into()))? },
        None => LayoutPolicy::Advisor(a.advisor.config(lanes)),
    };
    let opts = IngestOptions { policy, lanes, seed: a.seed };
    let (store, report) = Store::ingest_reader(open_csv(&a.input)?, &schema, &opts)
        .with_context(|| format!("ingesting {}", a.input.display()))?;
    store.save(&a.output).with_context(|| format!("writing {}", a.output.display()))?;

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    for c in &report.columns {
        w.serialize(c).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    let (bs, vbs) = report.split();
    eprintln!(
        "{} rows, {} columns ({bs} byte_slice : {vbs} pp_vbs), parsed in {:.3}s, wrote {}",
        report.n_rows,
        report.columns.len(),
        report.parse_secs,
        a.output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct AdviceRow<'a> {
    column: &'a str,
    kind: ColumnKind,
    chosen: LayoutKind,
    auc_byteslice: f64,
    auc_ppvbs: f64,
    degenerate: bool,
    advise_secs: f64,
}

#[derive(Serialize)]
struct PointRow<'a> {
    column: &'a str,
    layout: LayoutKind,
    selectivity: f64,
    cost: f64,
}

fn advise_cmd(a: AdviseArgs) -> CmdResult {
    let schema = load_schema(&a.schema)?;
    let cfg = a.advisor.config(lanes(a.lanes)?);
    let raw = read_csv(open_csv(&a.input)?, &schema).with_context(|| format!("reading {}", a.input.display()))?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    for (spec, data) in schema.columns.iter().zip(&raw) {
        let t = Instant::now();
        let advice = match data {
            RawColumn::Int(v) => advise(v, spec.kind, &cfg),
            RawColumn::Str(v) => advise(v, spec.kind, &cfg),
        }
        .with_context(|| format!("profiling column `{}`", spec.name))?;
        let secs = t.elapsed().as_secs_f64();
        if a.points {
            for (layout, points) in [(LayoutKind::ByteSlice, &advice.byteslice), (LayoutKind::PpVbs, &advice.ppvbs)] {
                for p in points {
                    w.serialize(PointRow { column: &spec.name, layout, selectivity: p.selectivity, cost: p.cost })
                        .map_err(anyhow::Error::from)?;
                }
            }
        } else {
            w.serialize(AdviceRow {
                column: &spec.name,
                kind: spec.kind,
                chosen: advice.chosen,
                auc_byteslice: advice.auc_byteslice,
                auc_ppvbs: advice.auc_ppvbs,
                degenerate: advice.degenerate,
                advise_secs: secs,
            })
            .map_err(anyhow::Error::from)?;
        }
    }
    w.flush().map_err(anyhow::Error::from)?;
    Ok(())
}

fn query(a: QueryArgs) -> CmdResult {
    if a.threads == 0 {
        return Err(usage(anyhow!("--threads must be positive")));
    }
    let store = Store::open(&a.store).with_context(|| format!("opening {}", a.store.display()))?;
    let projection: Vec<String> = if a.select.is_empty() { store.column_names().map(str::to_owned).collect() } else { a.select };
    let proj: Vec<&str> = projection.iter().map(String::as_str).collect();
    let q = Query::parse(&a.filter, &proj)?;
    let result = execute(&store, &q, ScanOptions::threads(a.threads))?;
    if a.count {
        println!("{}", result.rows.len());
    } else {
        result.write_csv(io::stdout().lock())?;
    }
    let mut err = io::stderr().lock();
    for t in &result.timings {
        let _ = writeln!(
            err,
            "{:<6} {:<16} {:>10.3} ms  rows={:<10} bytes={:<12} {}",
            format!("{:?}", t.operator).to_lowercase(),
            t.column,
            t.secs * 1e3,
            t.rows,
            t.bytes_loaded,
            t.detail
        );
    }
    let _ = writeln!(
        err,
        "total  scan {:.3} ms, lookup {:.3} ms, {} of {} rows",
        result.scan_secs() * 1e3,
        result.lookup_secs() * 1e3,
        result.rows.len(),
        store.n_rows()
    );
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> CmdResult {
    let layouts = a.layouts.iter().map(|l| LayoutKind::parse(l)).collect::<bytestore::Result<Vec<_>>>().map_err(|e| usage(e.into()))?;
    let spec = SweepSpec {
        layouts,
        skews: a.skews,
        domain_bits: a.domain_bits,
        selectivities: a.selectivities,
        literals: a.literals,
        n_rows: a.rows,
        seed: a.seed,
        order: if a.rank_order { ValueOrder::Rank } else { ValueOrder::Shuffled },
        repetitions: a.repetitions,
        threads: a.threads,
        lanes: lanes(a.lanes)?,
    };
    spec.validate().map_err(|e| usage(e.into()))?;
    let rows = bench::run_sweep(&spec, |r| {
        eprintln!(
            "{:<10} s={:<5} d={:<3} scan {:.3} ns/code, lookup {} ns/code, {:.2} bits/code",
            r.layout.name(),
            r.skew,
            r.domain_bits,
            r.scan_ns_per_code,
            r.lookup_ns_per_code.map_or("-".to_owned(), |x| format!("{x:.3}")),
            r.bits_per_code
        )
    })?;
    bench::write_csv(&rows, output(a.output.as_deref())?)?;
    Ok(())
}

fn gen(a: GenArgs) -> CmdResult {
    let mut spec = ZipfSpec::new(a.skew, a.domain_bits, a.rows, a.seed);
    if a.shuffle {
        spec = spec.shuffled();
    }
    spec.validate().map_err(|e| usage(e.into()))?;
    let values = gen_zipf(&spec)?;
    let mut w = csv::Writer::from_writer(output(a.output.as_deref())?);
    w.write_record([&a.name]).map_err(anyhow::Error::from)?;
    for v in values {
        w.write_record([v.to_string()]).map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct SizeRow<'a> {
    column: &'a str,
    layout: &'static str,
    distinct: usize,
    data_bytes: usize,
    bits_per_code: f64,
    detail: String,
}

fn inspect(a: InspectArgs) -> CmdResult {
    let store = Store::open(&a.store).with_context(|| format!("opening {}", a.store.display()))?;
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, store.manifest()).map_err(anyhow::Error::from)?;
    writeln!(out).map_err(anyhow::Error::from)?;
    writeln!(out).map_err(anyhow::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    for (m, col) in store.manifest().columns.iter().zip(store.columns()) {
        let layout = col.layout();
        let detail = match layout {
            LayoutColumn::PpVbs(v) => {
                let r = v.size_report();
                format!("slices={:?} masks={} directory={}", r.slice_bytes, r.mask_bytes, r.directory_bytes)
            }
            _ => String::new(),
        };
        w.serialize(SizeRow {
            column: &m.name,
            layout: m.layout.name(),
            distinct: m.distinct,
            data_bytes: layout.data_bytes(),
            bits_per_code: layout.bits_per_code(),
            detail,
        })
        .map_err(anyhow::Error::from)?;
    }
    w.flush().map_err(anyhow::Error::from)?;
    Ok(())
}
