//! Reading per-sample score dumps, contingency CSVs and probe-run success
//! counts.
//!
//! Score dumps are JSON lines with `task`, `doc_id` (string or integer),
//! `score` in [0, 1] and an optional non-negative `run`; any other field is
//! ignored. Contingency files are CSV with a `task,b,c` header and optional
//! `a`, `d` columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::score_model::{ContingencyTable, SampleScore};
use crate::{Error, Result};

/// Contents of one input file.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Samples(Vec<SampleScore>),
    /// Per-task contingency counts, in file order.
    Tables(Vec<(String, ContingencyTable)>),
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

/// Read a score dump or contingency CSV, deciding by the first non-blank line.
pub fn ingest(path: &Path) -> Result<Input> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if first.starts_with('{') {
        parse_samples(path, &text).map(Input::Samples)
    } else {
        parse_tables(path, text.as_bytes()).map(Input::Tables)
    }
}

pub fn ingest_samples(path: &Path) -> Result<Vec<SampleScore>> {
    match ingest(path)? {
        Input::Samples(s) => Ok(s),
        Input::Tables(_) => Err(parse_err(path, 1, "expected JSON lines, found a contingency CSV")),
    }
}

#[derive(Deserialize)]
struct SampleRecord {
    task: String,
    doc_id: Value,
    score: f64,
    #[serde(default)]
    run: Option<u32>,
}

fn doc_id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) if n.is_u64() || n.is_i64() => Some(n.to_string()),
        _ => None,
    }
}

fn parse_samples(path: &Path, text: &str) -> Result<Vec<SampleScore>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord =
            serde_json::from_str(raw).map_err(|e| parse_err(path, line, e.to_string()))?;
        let doc_id = doc_id_string(&rec.doc_id)
            .ok_or_else(|| parse_err(path, line, "doc_id must be a string or an integer"))?;
        if !(0.0..=1.0).contains(&rec.score) {
            return Err(Error::Range { path: path.display().to_string(), line, score: rec.score });
        }
        let run = rec.run.unwrap_or(0);
        let sample = SampleScore::new(&rec.task, &doc_id, run, rec.score)?;
        if !seen.insert((sample.task.clone(), sample.doc_id.clone(), run)) {
            return Err(Error::DuplicateKey {
                path: path.display().to_string(),
                line,
                key: format!("{}:{} run {run}", sample.task, sample.doc_id),
            });
        }
        out.push(sample);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct TableRecord {
    task: String,
    b: u64,
    c: u64,
    #[serde(default)]
    a: Option<u64>,
    #[serde(default)]
    d: Option<u64>,
}

fn parse_tables(path: &Path, bytes: &[u8]) -> Result<Vec<(String, ContingencyTable)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    for required in ["task", "b", "c"] {
        if !headers.iter().any(|h| h == required) {
            return Err(parse_err(path, 1, format!("contingency CSV header lacks `{required}`")));
        }
    }
    let mut out: Vec<(String, ContingencyTable)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: TableRecord =
            record.deserialize(Some(&headers)).map_err(|e| parse_err(path, line, e.to_string()))?;
        let task = row.task.trim().to_owned();
        if out.iter().any(|(t, _)| *t == task) {
            return Err(Error::DuplicateKey { path: path.display().to_string(), line, key: task });
        }
        out.push((task, ContingencyTable::new(row.a.unwrap_or(0), row.b, row.c, row.d.unwrap_or(0))));
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "contingency CSV has no rows"));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SuccessRecord {
    doc_id: Value,
    successes: u64,
    runs: u64,
}

/// Probe-run success counts, `{"doc_id": .., "successes": k, "runs": R}` per line.
pub fn ingest_success_counts(path: &Path) -> Result<BTreeMap<String, (u64, u64)>> {
    let reader = BufReader::new(open(path)?);
    let mut out = BTreeMap::new();
    for (i, raw) in reader.lines().enumerate() {
        let line = i + 1;
        let raw = raw.map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: SuccessRecord =
            serde_json::from_str(&raw).map_err(|e| parse_err(path, line, e.to_string()))?;
        let doc_id = doc_id_string(&rec.doc_id)
            .ok_or_else(|| parse_err(path, line, "doc_id must be a string or an integer"))?
            .trim()
            .to_owned();
        if rec.runs < 2 || rec.successes > rec.runs {
            return Err(parse_err(path, line, format!("need 0 <= successes <= runs and runs >= 2, got {}/{}", rec.successes, rec.runs)));
        }
        if out.insert(doc_id.clone(), (rec.successes, rec.runs)).is_some() {
            return Err(Error::DuplicateKey { path: path.display().to_string(), line, key: doc_id });
        }
    }
    Ok(out)
}
