use std::io::Write;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    /// CSV text; floats in scientific notation with `digits` significant digits.
    fn render(&self, digits: usize) -> String {
        match self {
            Cell::Float(x) if x.is_finite() => format!("{:.*e}", digits.saturating_sub(1), x),
            Cell::Float(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Float(x) if x.is_finite() => s.serialize_f64(*x),
            // JSON has no NaN/inf.
            Cell::Float(x) => s.serialize_str(&x.to_string()),
            Cell::Int(i) => s.serialize_u64(*i),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

/// Ordered key/value pairs, serialized as a JSON object in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Record(pub Vec<(String, Cell)>);

impl Record {
    pub fn push(&mut self, key: &str, value: impl Into<Cell>) {
        self.0.push((key.to_owned(), value.into()));
    }
}

impl Serialize for Record {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

struct RowView<'a>(&'a [String], &'a [Cell]);

impl Serialize for RowView<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for row in &self.rows {
            seq.serialize_element(&RowView(&self.headers, row))?;
        }
        seq.end()
    }
}

/// Command results: scalar summary plus an optional table of rows.
#[derive(Debug, Clone, Default)]
pub struct Results {
    pub summary: Record,
    pub table: Option<Table>,
}

impl Serialize for Results {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        for (k, v) in &self.summary.0 {
            map.serialize_entry(k, v)?;
        }
        if let Some(t) = &self.table {
            map.serialize_entry("rows", t)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
pub struct Report<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub results: &'a Results,
    pub warnings: &'a [String],
}

impl<C: Serialize> Report<'_, C> {
    pub fn render(&self, format: Format, digits: usize) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(self)?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => self.render_csv(digits),
        }
    }

    /// Config, summary (when a table follows) and warnings go into leading
    /// `# ` lines; a summary-only result becomes a one-row table.
    fn render_csv(&self, digits: usize) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        writeln!(out, "# command: {}", self.command)?;
        writeln!(out, "# config: {}", serde_json::to_string(self.config)?)?;
        for w in self.warnings {
            writeln!(out, "# warning: {}", w.replace('\n', " "))?;
        }
        let one_row;
        let table = match &self.results.table {
            Some(t) => {
                for (k, v) in &self.results.summary.0 {
                    writeln!(out, "# {k}: {}", v.render(digits))?;
                }
                t
            }
            None => {
                let summary = &self.results.summary.0;
                let mut t = Table::new(&[]);
                t.headers = summary.iter().map(|(k, _)| k.clone()).collect();
                t.rows
                    .push(summary.iter().map(|(_, v)| v.clone()).collect());
                one_row = t;
                &one_row
            }
        };
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        writer.write_record(&table.headers)?;
        for row in &table.rows {
            writer.write_record(row.iter().map(|c| c.render(digits)))?;
        }
        writer.flush()?;
        drop(writer);
        Ok(out)
    }
}
