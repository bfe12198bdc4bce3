//! Schemas, CSV ingestion and the single-file store format.
//!
//! File layout: magic `BYST`, format version as u32 LE, then length-prefixed
//! (u64 LE) sections. Section 0 is the JSON manifest; section `1 + i` holds
//! column `i` as its dictionary, a layout tag byte and the layout payload.

use std::collections::HashSet;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::advisor::{advise, Advice, AdvisorConfig};
use crate::codec::{put_bytes, put_u32, Reader};
use crate::column::{assignment_for, EncodedColumn};
use crate::datagen::PRNG;
use crate::dict::AssignmentKind;
use crate::error::{Error, Result};
use crate::layout::LayoutKind;
use crate::predicate::{ColumnKind, LaneConfig, Value};

pub const MAGIC: &[u8; 4] = b"BYST";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Overrides the layout policy for this column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutKind>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self { name: name.into(), kind, layout: None }
    }

    pub fn with_layout(self, layout: LayoutKind) -> Self {
        Self { layout: Some(layout), ..self }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let s = Self { columns };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::InvalidConfig("schema has no columns".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.columns {
            if c.name.is_empty() {
                return Err(Error::InvalidConfig("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate column `{}`", c.name)));
            }
            if c.kind == ColumnKind::Categorical && matches!(c.layout, Some(LayoutKind::PeVbp)) {
                return Err(Error::InvalidConfig(format!("column `{}`: pe_vbp needs an ordered column", c.name)));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum LayoutPolicy {
    Advisor(AdvisorConfig),
    Forced { layout: LayoutKind },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IngestOptions {
    pub policy: LayoutPolicy,
    pub lanes: LaneConfig,
    /// Recorded in the manifest when the data came from the generator.
    pub seed: Option<u64>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { policy: LayoutPolicy::Advisor(AdvisorConfig::default()), lanes: LaneConfig::default(), seed: None }
    }
}

impl IngestOptions {
    pub fn forced(layout: LayoutKind) -> Self {
        Self { policy: LayoutPolicy::Forced { layout }, ..Self::default() }
    }

    pub fn advisor(cfg: AdvisorConfig) -> Self {
        Self { policy: LayoutPolicy::Advisor(cfg), ..Self::default() }
    }
}

/// Advisor outcome as recorded in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdviceSummary {
    pub auc_byteslice: f64,
    pub auc_ppvbs: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnManifest {
    pub name: String,
    pub kind: ColumnKind,
    pub layout: LayoutKind,
    pub assignment: AssignmentKind,
    pub distinct: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<AdviceSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub n_rows: usize,
    pub lanes: usize,
    pub prng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub columns: Vec<ColumnManifest>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ColumnIngestReport {
    pub name: String,
    pub layout: LayoutKind,
    pub distinct: usize,
    pub encode_secs: f64,
    pub advise_secs: f64,
    pub bits_per_code: f64,
    #[serde(skip)]
    pub advice: Option<Advice>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IngestReport {
    pub n_rows: usize,
    pub columns: Vec<ColumnIngestReport>,
    pub parse_secs: f64,
}

impl IngestReport {
    /// `(ByteSlice, PP-VBS)` column counts.
    pub fn split(&self) -> (usize, usize) {
        let count = |k| self.columns.iter().filter(|c| c.layout == k).count();
        (count(LayoutKind::ByteSlice), count(LayoutKind::PpVbs))
    }
}

/// Column values before encoding.
#[derive(Clone, Debug, PartialEq)]
pub enum RawColumn {
    Int(Vec<i64>),
    Str(Vec<String>),
}

impl RawColumn {
    pub fn len(&self) -> usize {
        match self {
            RawColumn::Int(v) => v.len(),
            RawColumn::Str(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn matches(&self, kind: ColumnKind) -> bool {
        matches!((self, kind), (RawColumn::Int(_), ColumnKind::Numeric) | (RawColumn::Str(_), ColumnKind::Categorical | ColumnKind::SemiCategoricalString))
    }
}

/// Reads a CSV with a header row into one raw column per schema entry.
pub fn read_csv<R: Read>(input: R, schema: &Schema) -> Result<Vec<RawColumn>> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let positions = schema
        .columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == c.name)
                .ok_or_else(|| Error::InvalidConfig(format!("column `{}` missing from the CSV header", c.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cols: Vec<RawColumn> = schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Numeric => RawColumn::Int(Vec::new()),
            _ => RawColumn::Str(Vec::new()),
        })
        .collect();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        for ((spec, &pos), col) in schema.columns.iter().zip(&positions).zip(&mut cols) {
            let cell = rec.get(pos).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::NullValue { row });
            }
            match col {
                RawColumn::Int(v) => v.push(cell.trim().parse().map_err(|e| Error::Parse {
                    row,
                    column: spec.name.clone(),
                    message: format!("`{cell}` is not an integer: {e}"),
                })?),
                RawColumn::Str(v) => v.push(cell.to_owned()),
            }
        }
    }
    if cols[0].is_empty() {
        return Err(Error::EmptyColumn);
    }
    Ok(cols)
}

fn encode_one<T>(
    rows: &[T],
    spec: &ColumnSpec,
    opts: &IngestOptions,
) -> Result<(EncodedColumn, ColumnIngestReport)>
where
    T: std::hash::Hash + Eq + Clone + Into<Value>,
{
    let t = Instant::now();
    let (layout, advice) = match (spec.layout, opts.policy) {
        (Some(l), _) | (None, LayoutPolicy::Forced { layout: l }) => (l, None),
        (None, LayoutPolicy::Advisor(cfg)) => {
            let cfg = AdvisorConfig { lanes: opts.lanes, ..cfg };
            let a = advise(rows, spec.kind, &cfg)?;
            (a.chosen, Some(a))
        }
    };
    if spec.kind == ColumnKind::Categorical && layout == LayoutKind::PeVbp {
        return Err(Error::InvalidConfig(format!("column `{}`: pe_vbp needs an ordered column", spec.name)));
    }
    let advise_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let col = EncodedColumn::build(rows, spec.kind, layout, opts.lanes)?;
    let encode_secs = t.elapsed().as_secs_f64();
    let report = ColumnIngestReport {
        name: spec.name.clone(),
        layout,
        distinct: col.dictionary().len(),
        encode_secs,
        advise_secs: if advice.is_some() { advise_secs } else { 0.0 },
        bits_per_code: col.layout().bits_per_code(),
        advice,
    };
    Ok((col, report))
}

/// An opened or freshly ingested store.
#[derive(Clone, Debug)]
pub struct Store {
    manifest: Manifest,
    columns: Vec<EncodedColumn>,
}

impl Store {
    pub fn ingest_csv(path: impl AsRef<Path>, schema: &Schema, opts: &IngestOptions) -> Result<(Self, IngestReport)> {
        let file = fs::File::open(path)?;
        Self::ingest_reader(file, schema, opts)
    }

    pub fn ingest_reader<R: Read>(input: R, schema: &Schema, opts: &IngestOptions) -> Result<(Self, IngestReport)> {
        let t = Instant::now();
        let raw = read_csv(input, schema)?;
        let parse_secs = t.elapsed().as_secs_f64();
        let (store, mut report) = Self::from_raw(schema, raw, opts)?;
        report.parse_secs = parse_secs;
        Ok((store, report))
    }

    pub fn from_raw(schema: &Schema, raw: Vec<RawColumn>, opts: &IngestOptions) -> Result<(Self, IngestReport)> {
        schema.validate()?;
        if raw.len() != schema.columns.len() {
            return Err(Error::LengthMismatch { expected: schema.columns.len(), actual: raw.len() });
        }
        let n_rows = raw.first().map_or(0, RawColumn::len);
        if n_rows == 0 {
            return Err(Error::EmptyColumn);
        }
        let mut columns = Vec::with_capacity(raw.len());
        let mut reports = Vec::with_capacity(raw.len());
        let mut manifest_cols = Vec::with_capacity(raw.len());
        for (spec, data) in schema.columns.iter().zip(&raw) {
            if data.len() != n_rows {
                return Err(Error::LengthMismatch { expected: n_rows, actual: data.len() });
            }
            if !data.matches(spec.kind) {
                return Err(Error::TypeMismatch(format!("column `{}` data does not match {:?}", spec.name, spec.kind)));
            }
            let (col, report) = match data {
                RawColumn::Int(v) => encode_one(v, spec, opts)?,
                RawColumn::Str(v) => encode_one(v, spec, opts)?,
            };
            manifest_cols.push(ColumnManifest {
                name: spec.name.clone(),
                kind: spec.kind,
                layout: col.layout_kind(),
                assignment: col.dictionary().assignment().kind,
                distinct: col.dictionary().len(),
                advice: report.advice.as_ref().map(|a| AdviceSummary {
                    auc_byteslice: a.auc_byteslice,
                    auc_ppvbs: a.auc_ppvbs,
                    degenerate: a.degenerate,
                }),
            });
            columns.push(col);
            reports.push(report);
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            n_rows,
            lanes: opts.lanes.lanes(),
            prng: PRNG.to_owned(),
            seed: opts.seed,
            columns: manifest_cols,
        };
        Ok((Self { manifest, columns }, IngestReport { n_rows, columns: reports, parse_secs: 0.0 }))
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn n_rows(&self) -> usize {
        self.manifest.n_rows
    }

    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.manifest.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column(&self, name: &str) -> Result<&EncodedColumn> {
        self.manifest
            .columns
            .iter()
            .position(|c| c.name == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        let manifest = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        put_bytes(&mut out, &manifest);
        let mut section = Vec::new();
        for c in &self.columns {
            section.clear();
            c.write_to(&mut section);
            put_bytes(&mut out, &section);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a store file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let manifest: Manifest = serde_json::from_slice(r.bytes()?)?;
        if manifest.format_version != version {
            return Err(Error::Format("manifest version differs from the file header".into()));
        }
        let lanes = LaneConfig::new(manifest.lanes).map_err(|e| Error::Format(e.to_string()))?;
        let mut columns = Vec::with_capacity(manifest.columns.len());
        for m in &manifest.columns {
            let mut section = Reader::new(r.bytes()?);
            let col = EncodedColumn::read_from(&mut section, lanes)?;
            section.finish()?;
            if col.n_rows() != manifest.n_rows
                || col.layout_kind() != m.layout
                || col.kind() != m.kind
                || col.dictionary().assignment().kind != assignment_for(m.kind, m.layout)
            {
                return Err(Error::Format(format!("column `{}` disagrees with the manifest", m.name)));
            }
            columns.push(col);
        }
        r.finish()?;
        Ok(Self { manifest, columns })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
