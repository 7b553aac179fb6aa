//! Report assembly and CSV/JSON writing.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::ser::{Serialize, Serializer};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Num)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(v) if v.is_nan() => f.write_str("nan"),
            Cell::Num(v) if v.is_infinite() => f.write_str(if *v > 0.0 { "inf" } else { "-inf" }),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

// JSON has no infinities; those become the strings "inf", "-inf", "nan".
impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(_) => s.serialize_str(&self.to_string()),
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Text(t) if t.is_empty() => s.serialize_none(),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
        }
    }
}

/// Finite floats as numbers, the rest as strings.
pub fn num(v: f64) -> Value {
    serde_json::to_value(Cell::Num(v)).expect("cells always serialize")
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// What a verb produced: an optional table, scalar results, and an invariant
/// violation message if one was detected.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub table: Option<Table>,
    pub summary: Map<String, Value>,
    pub violation: Option<String>,
}

impl Report {
    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) if p != Path::new("-") => Box::new(io::BufWriter::new(File::create(p)?)),
        _ => Box::new(io::BufWriter::new(io::stdout())),
    })
}

/// Write the report. CSV puts metadata and scalar results on `#` lines above
/// the table; JSON puts them in `meta` and at the top level.
pub fn write_report(report: &Report, meta: &Map<String, Value>, format: Format, out: Option<&Path>) -> io::Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Json => {
            let mut obj = report.summary.clone();
            if let Some(t) = &report.table {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| {
                        let m: Map<String, Value> = t
                            .columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), serde_json::to_value(v).expect("cells serialize")))
                            .collect();
                        Value::Object(m)
                    })
                    .collect();
                obj.insert("rows".into(), Value::Array(rows));
            }
            obj.insert("meta".into(), Value::Object(meta.clone()));
            serde_json::to_writer_pretty(&mut w, &Value::Object(obj))?;
            writeln!(w)?;
        }
        Format::Csv => {
            for (k, v) in meta.iter().chain(report.summary.iter()) {
                let text = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                writeln!(w, "# {k}: {text}")?;
            }
            let mut csv = csv::Writer::from_writer(&mut w);
            match &report.table {
                Some(t) => {
                    csv.write_record(&t.columns)?;
                    for r in &t.rows {
                        csv.write_record(r.iter().map(|c| c.to_string()))?;
                    }
                }
                None => {
                    csv.write_record(["key", "value"])?;
                    for (k, v) in &report.summary {
                        if !(v.is_array() || v.is_object()) {
                            let text = match v {
                                Value::String(s) => s.clone(),
                                other => other.to_string(),
                            };
                            csv.write_record([k.as_str(), text.as_str()])?;
                        }
                    }
                }
            }
            csv.flush()?;
        }
    }
    w.flush()
}

/// Metadata block shared by every output.
pub fn metadata(verb: &str, config: Value, seed: Option<u64>, threads: usize, wall_clock_s: f64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), json!(concat!("isac ", env!("CARGO_PKG_VERSION"))));
    m.insert("verb".into(), json!(verb));
    m.insert("seed".into(), seed.map_or(Value::Null, |s| json!(s)));
    m.insert("threads".into(), json!(threads));
    m.insert("wall_clock_s".into(), num(wall_clock_s));
    m.insert("config".into(), config);
    m
}
