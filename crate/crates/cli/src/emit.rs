//! Tables and their CSV / JSON serialization.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value as Json};

use crate::config::{Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Null,
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}
impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}
impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Value::Int(x)
    }
}
impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}
impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}
impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Value::Null, Value::Float)
    }
}

/// Fixed column order plus rows; every row has one value per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }
}

/// 17 significant digits, which round-trips any f64.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Float(x) => format_float(*x),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => s.clone(),
        Value::Null => String::new(),
    }
}

pub fn write_csv<W: Write>(table: &Table, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(csv_field))?;
    }
    w.flush()?;
    Ok(())
}

fn json_value(v: &Value) -> Json {
    match v {
        Value::Float(x) => serde_json::Number::from_f64(*x).map_or(Json::Null, Json::Number),
        Value::Int(i) => Json::from(*i),
        Value::Bool(b) => Json::Bool(*b),
        Value::Text(s) => Json::String(s.clone()),
        Value::Null => Json::Null,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a> {
    pub config: &'a RunConfig,
    pub version: &'static str,
    pub seed: u64,
    pub columns: &'a [&'static str],
}

/// `{"meta": {...}, "data": [{column: value, ...}, ...]}`. Floats use the shortest
/// representation that parses back to the same bits; non-finite values become null.
pub fn to_json(table: &Table, config: &RunConfig) -> Json {
    let data: Vec<Json> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Json> =
                table.columns.iter().zip(row).map(|(c, v)| (c.to_string(), json_value(v))).collect();
            Json::Object(obj)
        })
        .collect();
    let meta = Meta { config, version: VERSION, seed: config.seed, columns: &table.columns };
    serde_json::json!({ "meta": meta, "data": data })
}

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

pub fn render(table: &Table, config: &RunConfig) -> Result<Vec<u8>, EmitError> {
    let mut buf = Vec::new();
    match config.format {
        Format::Csv => {
            write_csv(table, &mut buf).map_err(|source| EmitError::Csv { path: target(&config.output), source })?
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &to_json(table, config)).map_err(|e| EmitError::Io {
                path: target(&config.output),
                source: e.into(),
            })?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

fn target(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or("<stdout>".into(), |p| p.display().to_string())
}

/// Write the table to the configured path, or stdout when none is set.
pub fn emit(table: &Table, config: &RunConfig) -> Result<(), EmitError> {
    let bytes = render(table, config)?;
    let io = |source| EmitError::Io { path: target(&config.output), source };
    match &config.output {
        Some(p) => std::fs::write(p, bytes).map_err(io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes).and_then(|_| out.flush()).map_err(io)
        }
    }
}
