//! Conjunctive queries with projection.
//!
//! Text form: `col OP literal [AND col OP literal ...] [OR ...]` where `OP`
//! is one of `< > <= >= = !=` or `BETWEEN lo AND hi`. String literals may be
//! quoted with `'` or `"`. Conjunctions pipeline their scans; disjunctions
//! are the OR of separately evaluated conjunctions.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::bitvec::ResultBitVector;
use crate::error::{Error, Result};
use crate::layout::ScanOptions;
use crate::predicate::{CmpOp, Predicate, Value};
use crate::store::Store;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CondOp {
    Cmp(CmpOp),
    Between,
}

/// A predicate on a named column whose literals are still text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub column: String,
    pub op: CondOp,
    pub literals: Vec<String>,
}

impl Condition {
    pub fn new(column: impl Into<String>, op: CmpOp, literal: impl ToString) -> Self {
        Self { column: column.into(), op: CondOp::Cmp(op), literals: vec![literal.to_string()] }
    }

    pub fn between(column: impl Into<String>, lo: impl ToString, hi: impl ToString) -> Self {
        Self { column: column.into(), op: CondOp::Between, literals: vec![lo.to_string(), hi.to_string()] }
    }

    /// Types the literals against the column.
    pub fn bind(&self, store: &Store) -> Result<Predicate> {
        let kind = store.column(&self.column)?.kind();
        let values = self
            .literals
            .iter()
            .map(|l| kind.parse_value(l).map_err(Error::TypeMismatch))
            .collect::<Result<Vec<Value>>>()?;
        match self.op {
            CondOp::Cmp(op) => Ok(Predicate::Cmp(op, values[0].clone())),
            CondOp::Between => Predicate::between(values[0].clone(), values[1].clone()),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            CondOp::Cmp(op) => write!(f, "{} {} {}", self.column, op.symbol(), self.literals[0]),
            CondOp::Between => write!(f, "{} BETWEEN {} AND {}", self.column, self.literals[0], self.literals[1]),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Query {
    /// OR of AND-lists; empty selects every row.
    pub disjuncts: Vec<Vec<Condition>>,
    pub projection: Vec<String>,
}

#[derive(Debug, PartialEq)]
enum Token {
    Word(String),
    Quoted(String),
    Op(CmpOp),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '\'' || c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some(q) if q == c => break,
                    Some(ch) => s.push(ch),
                    None => return Err(Error::QuerySyntax(format!("unterminated quote in `{text}`"))),
                }
            }
            out.push(Token::Quoted(s));
        } else if "<>=!".contains(c) {
            chars.next();
            let next = chars.peek().copied();
            let op = match (c, next) {
                ('<', Some('=')) => Some(CmpOp::Le),
                ('>', Some('=')) => Some(CmpOp::Ge),
                ('!', Some('=')) | ('<', Some('>')) => Some(CmpOp::Ne),
                ('=', Some('=')) => Some(CmpOp::Eq),
                _ => None,
            };
            let op = match op {
                Some(op) => {
                    chars.next();
                    op
                }
                None => match c {
                    '<' => CmpOp::Lt,
                    '>' => CmpOp::Gt,
                    '=' => CmpOp::Eq,
                    _ => return Err(Error::QuerySyntax(format!("stray `!` in `{text}`"))),
                },
            };
            out.push(Token::Op(op));
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || "<>=!'\"".contains(ch) {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            out.push(Token::Word(s));
        }
    }
    Ok(out)
}

fn is_keyword(t: &Token, kw: &str) -> bool {
    matches!(t, Token::Word(w) if w.eq_ignore_ascii_case(kw))
}

impl Query {
    pub fn new(disjuncts: Vec<Vec<Condition>>, projection: Vec<String>) -> Self {
        Self { disjuncts, projection }
    }

    /// Parses a filter in text form; an empty or blank filter selects all rows.
    pub fn parse(filter: &str, projection: &[&str]) -> Result<Self> {
        let tokens = tokenize(filter)?;
        let mut disjuncts = Vec::new();
        let mut i = 0;
        if !tokens.is_empty() {
            let mut current = Vec::new();
            loop {
                let column = match tokens.get(i) {
                    Some(Token::Word(w)) => w.clone(),
                    other => return Err(Error::QuerySyntax(format!("expected a column name, found {other:?}"))),
                };
                let literal = |t: Option<&Token>| match t {
                    Some(Token::Word(w)) | Some(Token::Quoted(w)) => Ok(w.clone()),
                    other => Err(Error::QuerySyntax(format!("expected a literal after `{column}`, found {other:?}"))),
                };
                let cond = match tokens.get(i + 1) {
                    Some(Token::Op(op)) => {
                        let c = Condition { column: column.clone(), op: CondOp::Cmp(*op), literals: vec![literal(tokens.get(i + 2))?] };
                        i += 3;
                        c
                    }
                    Some(t) if is_keyword(t, "between") => {
                        let lo = literal(tokens.get(i + 2))?;
                        if !tokens.get(i + 3).is_some_and(|t| is_keyword(t, "and")) {
                            return Err(Error::QuerySyntax(format!("BETWEEN on `{column}` needs `AND`")));
                        }
                        let hi = literal(tokens.get(i + 4))?;
                        i += 5;
                        Condition { column: column.clone(), op: CondOp::Between, literals: vec![lo, hi] }
                    }
                    other => return Err(Error::QuerySyntax(format!("expected an operator after `{column}`, found {other:?}"))),
                };
                current.push(cond);
                match tokens.get(i) {
                    None => break,
                    Some(t) if is_keyword(t, "and") => i += 1,
                    Some(t) if is_keyword(t, "or") => {
                        disjuncts.push(std::mem::take(&mut current));
                        i += 1;
                    }
                    Some(t) => return Err(Error::QuerySyntax(format!("expected AND/OR, found {t:?}"))),
                }
            }
            disjuncts.push(current);
        }
        Ok(Self { disjuncts, projection: projection.iter().map(|s| s.to_string()).collect() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Scan,
    Lookup,
}

#[derive(Clone, Debug, Serialize)]
pub struct OperatorTiming {
    pub operator: Operator,
    pub column: String,
    /// The condition text for scans.
    pub detail: String,
    pub secs: f64,
    /// Rows selected after a scan, rows fetched by a lookup.
    pub rows: usize,
    pub bytes_loaded: u64,
}

#[derive(Clone, Debug)]
pub struct QueryResult {
    pub columns: Vec<String>,
    /// Row-major projected values in ascending row order.
    pub rows: Vec<Vec<Value>>,
    pub selection: ResultBitVector,
    pub timings: Vec<OperatorTiming>,
}

impl QueryResult {
    pub fn scan_secs(&self) -> f64 {
        self.timings.iter().filter(|t| t.operator == Operator::Scan).map(|t| t.secs).sum()
    }

    pub fn lookup_secs(&self) -> f64 {
        self.timings.iter().filter(|t| t.operator == Operator::Lookup).map(|t| t.secs).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the filter only.
pub fn select(store: &Store, query: &Query, opts: ScanOptions) -> Result<(ResultBitVector, Vec<OperatorTiming>)> {
    let n = store.n_rows();
    let mut timings = Vec::new();
    if query.disjuncts.is_empty() {
        return Ok((ResultBitVector::ones(n), timings));
    }
    // Bind everything first so errors surface before any work.
    let bound = query
        .disjuncts
        .iter()
        .map(|conj| conj.iter().map(|c| Ok((c, store.column(&c.column)?, c.bind(store)?))).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut result: Option<ResultBitVector> = None;
    for conj in bound {
        let mut running: Option<ResultBitVector> = None;
        for (cond, col, pred) in conj {
            let t = Instant::now();
            let (hits, stats) = col.scan(&pred, running.as_ref(), opts)?;
            timings.push(OperatorTiming {
                operator: Operator::Scan,
                column: cond.column.clone(),
                detail: cond.to_string(),
                secs: t.elapsed().as_secs_f64(),
                rows: hits.count_ones(),
                bytes_loaded: stats.bytes_loaded,
            });
            running = Some(hits);
        }
        let conj_hits = running.unwrap_or_else(|| ResultBitVector::ones(n));
        result = Some(match result {
            None => conj_hits,
            Some(r) => r.or(&conj_hits)?,
        });
    }
    Ok((result.expect("at least one disjunct"), timings))
}

pub fn execute(store: &Store, query: &Query, opts: ScanOptions) -> Result<QueryResult> {
    for name in &query.projection {
        store.column(name)?;
    }
    let (selection, mut timings) = select(store, query, opts)?;
    let count = selection.count_ones();
    let mut columns_out = Vec::with_capacity(query.projection.len());
    for name in &query.projection {
        let col = store.column(name)?;
        if count == 0 {
            timings.push(OperatorTiming {
                operator: Operator::Lookup,
                column: name.clone(),
                detail: String::new(),
                secs: 0.0,
                rows: 0,
                bytes_loaded: 0,
            });
            columns_out.push(Vec::new());
            continue;
        }
        let t = Instant::now();
        let values = col.lookup_values(&selection)?;
        timings.push(OperatorTiming {
            operator: Operator::Lookup,
            column: name.clone(),
            detail: String::new(),
            secs: t.elapsed().as_secs_f64(),
            rows: values.len(),
            bytes_loaded: 0,
        });
        columns_out.push(values);
    }
    let rows = (0..count).map(|r| columns_out.iter().map(|c| c[r].clone()).collect()).collect();
    Ok(QueryResult { columns: query.projection.clone(), rows, selection, timings })
}
