//! Tabular output for the command line: CSV with `#` comment headers, or a
//! JSON document carrying the same header as an object.
//!
//! Nothing time- or path-dependent goes into a document, so identical runs
//! render identical bytes.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{BeamParameters, PARAMETER_KEYS};

pub const TOOL: &str = "harvester";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float_text(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // serde_json writes non-finite floats as null.
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// and very large magnitudes, with `nan`, `inf` and `-inf` spelled out.
pub fn float_text(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let s = format!("{v:?}");
        match s.strip_suffix(".0") {
            Some(t) => t.to_string(),
            None => s,
        }
    }
}

/// One table, optionally labelled, with trailing free-text notes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub label: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// What produced a document: the subcommand, the parameter set and every
/// setting that affects the numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub subcommand: String,
    pub params: BeamParameters,
    pub settings: Vec<(String, String)>,
}

impl Header {
    pub fn new(subcommand: &str, params: BeamParameters) -> Header {
        Header { subcommand: subcommand.into(), params, settings: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.into(), value.to_string()));
    }

    pub fn set_float(&mut self, key: &str, value: f64) {
        self.set(key, float_text(value));
    }

    fn comment_lines(&self) -> Vec<String> {
        let params: Vec<String> =
            PARAMETER_KEYS.iter().map(|k| format!("{k}={}", float_text(self.params.get(k).unwrap()))).collect();
        let mut out = vec![
            format!("# {TOOL} {VERSION}"),
            format!("# subcommand: {}", self.subcommand),
            format!("# parameters: {}", params.join(" ")),
        ];
        if !self.settings.is_empty() {
            let s: Vec<String> = self.settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push(format!("# settings: {}", s.join(" ")));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut params = Map::new();
        for k in PARAMETER_KEYS {
            params.insert(k.into(), json!(self.params.get(k).unwrap()));
        }
        let mut settings = Map::new();
        for (k, v) in &self.settings {
            settings.insert(k.clone(), json!(v));
        }
        json!({
            "tool": TOOL,
            "version": VERSION,
            "subcommand": self.subcommand,
            "parameters": params,
            "settings": settings,
        })
    }
}

pub fn render(header: &Header, tables: &[Table], format: Format) -> String {
    match format {
        Format::Csv => render_csv(header, tables),
        Format::Json => {
            let blocks: Vec<Value> = tables.iter().map(table_json).collect();
            let doc = json!({ "header": header.to_json(), "tables": blocks });
            let mut s = serde_json::to_string_pretty(&doc).expect("plain values serialize");
            s.push('\n');
            s
        }
    }
}

fn render_csv(header: &Header, tables: &[Table]) -> String {
    let mut lines = header.comment_lines();
    for t in tables {
        if let Some(label) = &t.label {
            lines.push(format!("# {label}"));
        }
        lines.push(t.columns.join(","));
        for row in &t.rows {
            lines.push(row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
        }
        lines.extend(t.notes.iter().map(|n| format!("# {n}")));
    }
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

fn table_json(t: &Table) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            for (c, v) in t.columns.iter().zip(r) {
                m.insert(c.clone(), v.json());
            }
            Value::Object(m)
        })
        .collect();
    json!({ "label": t.label, "columns": t.columns, "rows": rows, "notes": t.notes })
}

/// A JSON document with the usual header and an arbitrary body.
pub fn render_json_report(header: &Header, key: &str, body: Value) -> String {
    let mut doc = Map::new();
    doc.insert("header".into(), header.to_json());
    doc.insert(key.into(), body);
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("plain values serialize");
    s.push('\n');
    s
}

/// A gnuplot script that plots column `y` against column `x` of a CSV file.
pub fn gnuplot_script(data_file: &str, table: &Table, x: &str, y: &str) -> Option<String> {
    let xi = table.column(x)? + 1;
    let yi = table.column(y)? + 1;
    Some(format!(
        "set datafile separator ','\nset datafile commentschars '#'\nset key off\nset xlabel '{x}'\nset ylabel '{y}'\n\
         plot '{data_file}' every ::1 using {xi}:{yi} with points pt 7\n"
    ))
}

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: path.display().to_string(), message: e.to_string() };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
